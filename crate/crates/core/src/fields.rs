//! Grids, field containers, transforms in x and v, the Maxwellian, snapshots.

use crate::analytic::AnalyticState;
use crate::error::{LabError, Result};
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;
use std::f64::consts::PI;
use std::io::{Read, Write};

pub fn maxwellian(v: &[f64]) -> f64 {
    let d = v.len() as f64;
    let r2: f64 = v.iter().map(|x| x * x).sum();
    (2.0 * PI).powf(-d / 2.0) * (-0.5 * r2).exp()
}

pub fn sqrt_maxwellian(v: &[f64]) -> f64 {
    let d = v.len() as f64;
    let r2: f64 = v.iter().map(|x| x * x).sum();
    (2.0 * PI).powf(-d / 4.0) * (-0.25 * r2).exp()
}

/// ⟨v⟩ = (1+|v|²)^{1/2}.
pub fn japanese(v: &[f64]) -> f64 {
    (1.0 + v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

/// Uniform periodized velocity grid on [−V, V)^d.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityGrid {
    pub dim: usize,
    pub n: usize,
    pub v_max: f64,
}

impl VelocityGrid {
    pub fn new(dim: usize, n: usize, v_max: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(LabError::InvalidParam("N_v must be even and >= 8".into()));
        }
        if dim != 1 && dim != 3 {
            return Err(LabError::InvalidParam("d_v must be 1 or 3".into()));
        }
        Ok(Self { dim, n, v_max })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.v_max / self.n as f64
    }

    pub fn deta(&self) -> f64 {
        PI / self.v_max
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.v_max + j as f64 * self.h()
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        let mut r = idx;
        for a in (0..self.dim).rev() {
            out[a] = r % self.n;
            r /= self.n;
        }
        out
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx).into_iter().map(|j| self.node(j)).collect()
    }

    /// Signed frequency index in FFT order; the Nyquist index maps to −n/2.
    pub fn freq_index(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    pub fn freq_indices(&self, idx: usize) -> Vec<i64> {
        self.multi_index(idx).into_iter().map(|j| self.freq_index(j)).collect()
    }

    pub fn is_nyquist(&self, f: i64) -> bool {
        f == -(self.n as i64) / 2
    }

    /// Cell volume h^d.
    pub fn cell(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }
}

/// Wavenumber set {−K..K}^{d_x}, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSet {
    pub dim: usize,
    pub k_max: i64,
}

impl ModeSet {
    pub fn new(dim: usize, k_max: i64) -> Self {
        Self { dim, k_max }
    }

    pub fn side(&self) -> usize {
        (2 * self.k_max + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn k(&self, idx: usize) -> Vec<i64> {
        let mut out = vec![0; self.dim];
        let mut r = idx;
        for a in (0..self.dim).rev() {
            out[a] = (r % self.side()) as i64 - self.k_max;
            r /= self.side();
        }
        out
    }

    pub fn index(&self, k: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for &ki in k {
            if ki.abs() > self.k_max {
                return None;
            }
            idx = idx * self.side() + (ki + self.k_max) as usize;
        }
        Some(idx)
    }

    pub fn neg_index(&self, idx: usize) -> usize {
        let k: Vec<i64> = self.k(idx).iter().map(|x| -x).collect();
        self.index(&k).unwrap()
    }
}

/// In-place DFT along every axis of a row-major block `shape`, each element
/// being a contiguous run of `inner` values.
pub fn fft_nd(data: &mut [C64], shape: &[usize], inner: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total * inner);
    for axis in 0..shape.len() {
        let n = shape[axis];
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        let stride: usize = shape[axis + 1..].iter().product::<usize>() * inner;
        let outer: usize = shape[..axis].iter().product();
        let mut line = vec![C64::new(0.0, 0.0); n];
        for o in 0..outer {
            for r in 0..stride {
                let base = o * n * stride + r;
                for j in 0..n {
                    line[j] = data[base + j * stride];
                }
                fft.process(&mut line);
                for j in 0..n {
                    data[base + j * stride] = line[j];
                }
            }
        }
    }
}

/// Forward velocity DFT of one column, then pointwise multiplier, then inverse.
/// The multiplier receives the signed frequency index per axis.
pub fn apply_v_multiplier<F: Fn(&[i64]) -> C64>(col: &mut [C64], grid: &VelocityGrid, m: F) {
    let shape = vec![grid.n; grid.dim];
    fft_nd(col, &shape, 1, false);
    let norm = 1.0 / grid.len() as f64;
    for (idx, c) in col.iter_mut().enumerate() {
        *c *= m(&grid.freq_indices(idx)) * norm;
    }
    fft_nd(col, &shape, 1, true);
}

/// Cached forward/inverse plans for repeated transforms of velocity columns.
#[derive(Clone)]
pub struct VelocityFft {
    grid: VelocityGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl VelocityFft {
    pub fn new(grid: &VelocityGrid) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        Self {
            grid: grid.clone(),
            fwd: planner.plan_fft_forward(grid.n),
            inv: planner.plan_fft_inverse(grid.n),
        }
    }

    fn run(&self, col: &mut [C64], inverse: bool) {
        let n = self.grid.n;
        let d = self.grid.dim;
        let fft = if inverse { &self.inv } else { &self.fwd };
        if d == 1 {
            fft.process(col);
            return;
        }
        let mut line = vec![C64::new(0.0, 0.0); n];
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            let outer = n.pow(axis as u32);
            for o in 0..outer {
                for r in 0..stride {
                    let base = o * n * stride + r;
                    for j in 0..n {
                        line[j] = col[base + j * stride];
                    }
                    fft.process(&mut line);
                    for j in 0..n {
                        col[base + j * stride] = line[j];
                    }
                }
            }
        }
    }

    /// Unnormalized DFT in every velocity axis.
    pub fn forward(&self, col: &mut [C64]) {
        self.run(col, false);
    }

    /// Inverse DFT including the 1/N^d factor.
    pub fn inverse(&self, col: &mut [C64]) {
        self.run(col, true);
        let c = 1.0 / self.grid.len() as f64;
        for z in col.iter_mut() {
            *z *= c;
        }
    }
}

/// Continuous transform ∫e^{−iη·v}g dv at the grid frequencies (FFT order),
/// approximated by the periodic trapezoid rule.
pub fn column_spectrum(col: &[C64], grid: &VelocityGrid) -> Vec<C64> {
    let mut out = col.to_vec();
    fft_nd(&mut out, &vec![grid.n; grid.dim], 1, false);
    let h = grid.cell();
    for (idx, z) in out.iter_mut().enumerate() {
        let parity: i64 = grid.freq_indices(idx).iter().sum();
        *z *= if parity % 2 == 0 { h } else { -h };
    }
    out
}

/// Partial-Fourier state f̂(k, v).
#[derive(Clone, Debug, PartialEq)]
pub struct KvField {
    pub modes: ModeSet,
    pub grid: VelocityGrid,
    pub values: Vec<C64>,
    pub time_tag: f64,
}

impl KvField {
    pub fn zeros(modes: ModeSet, grid: VelocityGrid) -> Self {
        let n = modes.len() * grid.len();
        Self { modes, grid, values: vec![C64::new(0.0, 0.0); n], time_tag: 0.0 }
    }

    pub fn column(&self, mi: usize) -> &[C64] {
        let n = self.grid.len();
        &self.values[mi * n..(mi + 1) * n]
    }

    pub fn column_mut(&mut self, mi: usize) -> &mut [C64] {
        let n = self.grid.len();
        &mut self.values[mi * n..(mi + 1) * n]
    }

    pub fn l2_v(&self, mi: usize) -> f64 {
        let s: f64 = self.column(mi).iter().map(|c| c.norm_sqr()).sum();
        (s * self.grid.cell()).sqrt()
    }

    pub fn l2(&self) -> f64 {
        (0..self.modes.len())
            .map(|m| self.l2_v(m).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// max |f̂(−k,v) − conj f̂(k,v)|.
    pub fn reality_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for mi in 0..self.modes.len() {
            let ni = self.modes.neg_index(mi);
            for (a, b) in self.column(mi).iter().zip(self.column(ni)) {
                m = m.max((a - b.conj()).norm());
            }
        }
        m
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    pub fn write_snapshot<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&(self.modes.dim as u64).to_le_bytes())?;
        w.write_all(&(self.grid.dim as u64).to_le_bytes())?;
        w.write_all(&self.modes.k_max.to_le_bytes())?;
        w.write_all(&(self.grid.n as u64).to_le_bytes())?;
        w.write_all(&self.grid.v_max.to_le_bytes())?;
        w.write_all(&self.time_tag.to_le_bytes())?;
        for c in &self.values {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(r: &mut R) -> Result<Self> {
        let mut b = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut b)?;
            Ok(b)
        };
        let d_x = u64::from_le_bytes(next(r)?) as usize;
        let d_v = u64::from_le_bytes(next(r)?) as usize;
        let k_max = i64::from_le_bytes(next(r)?);
        let n_v = u64::from_le_bytes(next(r)?) as usize;
        let v_max = f64::from_le_bytes(next(r)?);
        let time_tag = f64::from_le_bytes(next(r)?);
        let modes = ModeSet::new(d_x, k_max);
        let grid = VelocityGrid::new(d_v, n_v, v_max)?;
        let mut f = KvField::zeros(modes, grid);
        f.time_tag = time_tag;
        for c in &mut f.values {
            let re = f64::from_le_bytes(next(r)?);
            let im = f64::from_le_bytes(next(r)?);
            *c = C64::new(re, im);
        }
        Ok(f)
    }
}

/// Physical-space samples f(x, v) on the (2K+1)^{d_x} torus grid × velocity grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    pub modes: ModeSet,
    pub grid: VelocityGrid,
    pub values: Vec<C64>,
}

impl PhysicalField {
    pub fn x_point(&self, idx: usize) -> Vec<f64> {
        let side = self.modes.side();
        let mut out = vec![0.0; self.modes.dim];
        let mut r = idx;
        for a in (0..self.modes.dim).rev() {
            out[a] = 2.0 * PI * (r % side) as f64 / side as f64;
            r /= side;
        }
        out
    }

    /// (2π)^{−d_x}∫∫|f|² via the grid rule.
    pub fn l2(&self) -> f64 {
        let nx = self.modes.len() as f64;
        let s: f64 = self.values.iter().map(|c| c.norm_sqr()).sum();
        (s * self.grid.cell() / nx).sqrt()
    }
}

/// 𝓕_x with coefficient normalization f̂(k) = (2π)^{−d}∫e^{−ik·x}f.
pub fn transform_x(phys: &PhysicalField) -> Result<KvField> {
    let nv = phys.grid.len();
    if phys.values.len() != phys.modes.len() * nv {
        return Err(LabError::DimensionMismatch("physical field size".into()));
    }
    let side = phys.modes.side();
    let shape = vec![side; phys.modes.dim];
    let mut data = phys.values.clone();
    fft_nd(&mut data, &shape, nv, false);
    let norm = 1.0 / phys.modes.len() as f64;
    let mut out = KvField::zeros(phys.modes.clone(), phys.grid.clone());
    // DFT index j ↦ wavenumber j (j ≤ K) or j − side
    for xi in 0..phys.modes.len() {
        let mut k = vec![0i64; phys.modes.dim];
        let mut r = xi;
        for a in (0..phys.modes.dim).rev() {
            let j = (r % side) as i64;
            k[a] = if j <= phys.modes.k_max { j } else { j - side as i64 };
            r /= side;
        }
        let mi = phys.modes.index(&k).unwrap();
        for v in 0..nv {
            out.values[mi * nv + v] = data[xi * nv + v] * norm;
        }
    }
    Ok(out)
}

pub fn inverse_transform_x(f: &KvField) -> PhysicalField {
    let nv = f.grid.len();
    let side = f.modes.side();
    let mut data = vec![C64::new(0.0, 0.0); f.values.len()];
    for mi in 0..f.modes.len() {
        let k = f.modes.k(mi);
        let mut xi = 0usize;
        for &ki in &k {
            let j = if ki >= 0 { ki as usize } else { (ki + side as i64) as usize };
            xi = xi * side + j;
        }
        data[xi * nv..(xi + 1) * nv].copy_from_slice(f.column(mi));
    }
    fft_nd(&mut data, &vec![side; f.modes.dim], nv, true);
    PhysicalField { modes: f.modes.clone(), grid: f.grid.clone(), values: data }
}

/// Exact sampling of a closed-form state on the partial-Fourier grid.
pub fn sample_analytic(state: &AnalyticState, modes: &ModeSet, grid: &VelocityGrid) -> Result<KvField> {
    if state.d_x != modes.dim || state.d_v != grid.dim {
        return Err(LabError::DimensionMismatch(format!(
            "state ({}, {}) vs grid ({}, {})",
            state.d_x, state.d_v, modes.dim, grid.dim
        )));
    }
    let mut f = KvField::zeros(modes.clone(), grid.clone());
    let nv = grid.len();
    let pts: Vec<Vec<f64>> = (0..nv).map(|i| grid.point(i)).collect();
    for t in &state.terms {
        let mi = modes.index(&t.k).ok_or_else(|| LabError::WavenumberOverflow {
            k: t.k.clone(),
            k_max: modes.k_max,
        })?;
        for (vi, p) in pts.iter().enumerate() {
            f.values[mi * nv + vi] += t.eval_v(p);
        }
    }
    Ok(f)
}

/// Full-Fourier spectrum on a centered uniform η grid, η_j = (j − n/2)Δη.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpectrum {
    pub modes: ModeSet,
    pub d_eta: usize,
    pub n_eta: usize,
    pub deta: f64,
    pub values: Vec<C64>,
}

impl PhaseSpectrum {
    pub fn zeros(modes: ModeSet, d_eta: usize, n_eta: usize, deta: f64) -> Self {
        let n = modes.len() * n_eta.pow(d_eta as u32);
        Self { modes, d_eta, n_eta, deta, values: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn n_points(&self) -> usize {
        self.n_eta.pow(self.d_eta as u32)
    }

    pub fn eta(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.d_eta];
        let mut r = idx;
        for a in (0..self.d_eta).rev() {
            out[a] = ((r % self.n_eta) as f64 - (self.n_eta / 2) as f64) * self.deta;
            r /= self.n_eta;
        }
        out
    }

    pub fn column(&self, mi: usize) -> &[C64] {
        let n = self.n_points();
        &self.values[mi * n..(mi + 1) * n]
    }

    /// ‖f_k‖_{L²_v} = ((2π)^{−d}∫|F f_k|²dη)^{1/2} by the grid rule.
    pub fn l2_v(&self, mi: usize) -> f64 {
        let s: f64 = self.column(mi).iter().map(|c| c.norm_sqr()).sum();
        (s * self.deta.powi(self.d_eta as i32) / (2.0 * PI).powi(self.d_eta as i32)).sqrt()
    }

    pub fn l2(&self) -> f64 {
        (0..self.modes.len())
            .map(|m| self.l2_v(m).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn from_state(state: &AnalyticState, modes: &ModeSet, n_eta: usize, deta: f64) -> Self {
        let mut sp = Self::zeros(modes.clone(), state.d_v, n_eta, deta);
        let np = sp.n_points();
        for mi in 0..modes.len() {
            let k = modes.k(mi);
            for j in 0..np {
                let eta = sp.eta(j);
                sp.values[mi * np + j] = state.spectrum(&k, &eta);
            }
        }
        sp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::Poly;
    use rand::{Rng, SeedableRng};

    #[test]
    fn column_spectrum_matches_closed_form() {
        let grid = VelocityGrid::new(1, 64, 10.0).unwrap();
        let col: Vec<C64> = (0..64).map(|j| C64::new((-0.5 * (grid.node(j) - 0.3).powi(2)).exp(), 0.0)).collect();
        let sp = column_spectrum(&col, &grid);
        for j in 0..64 {
            let eta = grid.freq_index(j) as f64 * grid.deta();
            let exact = (2.0 * PI).sqrt() * (-0.5 * eta * eta).exp() * C64::from_polar(1.0, -0.3 * eta);
            assert!((sp[j] - exact).norm() < 1e-12, "{j}");
        }
    }

    #[test]
    fn cached_fft_round_trip() {
        let grid = VelocityGrid::new(3, 8, 4.0).unwrap();
        let f = VelocityFft::new(&grid);
        let orig: Vec<C64> = (0..grid.len()).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut a = orig.clone();
        let mut b = orig.clone();
        f.forward(&mut a);
        fft_nd(&mut b, &[8, 8, 8], 1, false);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-10));
        f.inverse(&mut a);
        assert!(a.iter().zip(&orig).all(|(x, y)| (x - y).norm() < 1e-12));
    }

    #[test]
    fn maxwellian_at_origin() {
        assert!((maxwellian(&[0.0; 3]) - 0.063_493_635_934_240_97).abs() < 1e-15);
    }

    #[test]
    fn maxwellian_unit_mass_on_grid() {
        let g = VelocityGrid::new(3, 32, 8.0).unwrap();
        let s: f64 = (0..g.len()).map(|i| maxwellian(&g.point(i))).sum::<f64>() * g.cell();
        assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn maxwellian_moments() {
        let g = VelocityGrid::new(3, 32, 8.0).unwrap();
        let (mut m1, mut m11, mut m12, mut m4) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..g.len() {
            let v = g.point(i);
            let w = maxwellian(&v) * g.cell();
            let r2: f64 = v.iter().map(|x| x * x).sum();
            m1 += w * v[0];
            m11 += w * v[0] * v[0];
            m12 += w * v[0] * v[1];
            m4 += w * r2 * r2;
        }
        assert!(m1.abs() < 1e-10 && m12.abs() < 1e-10);
        assert!((m11 - 1.0).abs() < 1e-10);
        assert!((m4 - 15.0).abs() < 1e-9);
    }

    #[test]
    fn single_mode_transform() {
        let modes = ModeSet::new(1, 4);
        let grid = VelocityGrid::new(1, 8, 4.0).unwrap();
        let mut phys = PhysicalField {
            modes: modes.clone(),
            grid: grid.clone(),
            values: vec![C64::new(0.0, 0.0); modes.len() * grid.len()],
        };
        for xi in 0..modes.len() {
            let x = phys.x_point(xi)[0];
            for v in 0..grid.len() {
                phys.values[xi * grid.len() + v] = C64::from_polar(1.0, x);
            }
        }
        let f = transform_x(&phys).unwrap();
        for mi in 0..modes.len() {
            let expect = if modes.k(mi) == vec![1] { 1.0 } else { 0.0 };
            for c in f.column(mi) {
                assert!((c - expect).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn roundtrip_parseval_reality() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let modes = ModeSet::new(2, 3);
        let grid = VelocityGrid::new(1, 16, 5.0).unwrap();
        let vals: Vec<C64> = (0..modes.len() * grid.len())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0))
            .collect();
        let phys = PhysicalField { modes, grid, values: vals };
        let f = transform_x(&phys).unwrap();
        assert!(f.reality_defect() < 1e-12);
        assert!((f.l2() - phys.l2()).abs() < 1e-10 * phys.l2());
        let back = inverse_transform_x(&f);
        for (a, b) in back.values.iter().zip(&phys.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn sampling_sqrt_mu_and_mode() {
        let modes = ModeSet::new(1, 2);
        let grid = VelocityGrid::new(1, 16, 8.0).unwrap();
        let f = sample_analytic(&AnalyticState::sqrt_maxwellian(1, 1), &modes, &grid).unwrap();
        let z = modes.index(&[0]).unwrap();
        for (i, c) in f.column(z).iter().enumerate() {
            assert!((c.re - sqrt_maxwellian(&grid.point(i))).abs() < 1e-15);
        }
        let st = AnalyticState::term(&[1], Poly::var(1, 0), &[0.0], 2f64.sqrt());
        let g = sample_analytic(&st, &modes, &grid).unwrap();
        assert_eq!(g.l2_v(z), 0.0);
        let big = AnalyticState::term(&[3], Poly::one(1), &[0.0], 1.0);
        assert!(sample_analytic(&big, &modes, &grid).is_err());
    }

    #[test]
    fn snapshot_roundtrip() {
        let modes = ModeSet::new(1, 2);
        let grid = VelocityGrid::new(1, 8, 3.0).unwrap();
        let mut f = sample_analytic(&AnalyticState::sqrt_maxwellian(1, 1), &modes, &grid).unwrap();
        f.time_tag = 0.75;
        let mut buf = Vec::new();
        f.write_snapshot(&mut buf).unwrap();
        assert_eq!(buf.len(), 48 + 16 * f.values.len());
        let g = KvField::read_snapshot(&mut buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn derivative_multiplier_on_gaussian() {
        let grid = VelocityGrid::new(1, 64, 10.0).unwrap();
        let mut col: Vec<C64> = (0..64).map(|i| C64::new((-grid.node(i).powi(2)).exp(), 0.0)).collect();
        let de = grid.deta();
        apply_v_multiplier(&mut col, &grid, |f| {
            if grid.is_nyquist(f[0]) {
                C64::new(0.0, 0.0)
            } else {
                C64::new(0.0, f[0] as f64 * de)
            }
        });
        for i in 0..64 {
            let v = grid.node(i);
            assert!((col[i].re + 2.0 * v * (-v * v).exp()).abs() < 1e-10);
        }
    }
}
