use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("wavenumber {k:?} outside ±{k_max}")]
    WavenumberOverflow { k: Vec<i64>, k_max: i64 },
    #[error("weighted amplitude overflow ({0:e})")]
    Overflow(f64),
    #[error("order {order} below noise floor (relative amplitude {rel:e})")]
    BelowNoiseFloor { order: u32, rel: f64 },
    #[error("stability bound violated: dt = {dt}, limit = {limit}")]
    Unstable { dt: f64, limit: f64 },
    #[error("norm blow-up at step {step} (t = {t})")]
    BlowUp { step: usize, t: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("non-uniform snapshot grid")]
    NonUniformGrid,
    #[error("extrapolation did not converge: spread {spread:e} > tol {tol:e}")]
    ExtrapolationDiverged { spread: f64, tol: f64 },
    #[error("non-unit sigma (|σ| = {0})")]
    NonUnitSigma(f64),
    #[error("degenerate denominator: {0}")]
    Degenerate(String),
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
