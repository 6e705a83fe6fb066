//! Spectral kinetic-equation lab.
//!
//! Exact solutions of the fractional Kolmogorov equation, Gevrey-index and
//! radius diagnostics, a splitting solver for the hard-potential Fokker–Planck
//! toy model, commuting vector fields, the non-cutoff Boltzmann collision
//! operator by singular quadrature, the macro–micro decomposition, and a
//! subelliptic Fourier multiplier.

pub mod analytic;
pub mod collision;
pub mod error;
pub mod ffp1;
pub mod fields;
pub mod diagnostics;
pub mod inequalities;
pub mod kolmogorov;
pub mod macro_micro;
pub mod norms;
pub mod params;
pub mod quad;
pub mod subelliptic;
pub mod vector_fields;

pub use error::{LabError, Result};
pub use num_complex::Complex64 as C64;
