//! The hypoelliptic symbol λ_k(η), the multiplier ℳ = 1 + c₀λ_k(D_v), and scans of the
//! symbol inequality behind the ⟨k⟩^{s/(1+2s)} gain.

use crate::analytic::AnalyticState;
use crate::error::{LabError, Result};
use crate::fields::{VelocityFft, VelocityGrid};
use crate::kolmogorov::exponent_integral;
use crate::quad::gauss_legendre;
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const C0_DEFAULT: f64 = 0.25;

fn psi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

fn dpsi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        psi(x) / (x * x)
    }
}

/// Smooth step: 0 for x ≤ 0, 1 for x ≥ 1.
fn step(x: f64) -> f64 {
    let (a, b) = (psi(x), psi(1.0 - x));
    a / (a + b)
}

fn dstep(x: f64) -> f64 {
    let (a, b) = (psi(x), psi(1.0 - x));
    let (da, db) = (dpsi(x), -dpsi(1.0 - x));
    (da * b - a * db) / ((a + b) * (a + b))
}

/// χ(r) = 1 − step(|r| − 1): equal to 1 on [−1, 1], supported in [−2, 2].
pub fn chi(r: f64) -> f64 {
    1.0 - step(r.abs() - 1.0)
}

/// χ′(r).
pub fn dchi(r: f64) -> f64 {
    -dstep(r.abs() - 1.0) * r.signum()
}

fn jap2(k: &[i64]) -> f64 {
    1.0 + k.iter().map(|&x| (x * x) as f64).sum::<f64>()
}

fn exponents(s: f64) -> (f64, f64) {
    ((2.0 + 2.0 * s) / (1.0 + 2.0 * s), 1.0 / (1.0 + 2.0 * s))
}

/// λ_k(η) = −(k·η)⟨k⟩^{−(2+2s)/(1+2s)} χ(|η|⟨k⟩^{−1/(1+2s)}).
pub fn lambda_symbol(k: &[i64], eta: &[f64], s: f64) -> f64 {
    let (p, q) = exponents(s);
    let jk = jap2(k).sqrt();
    let ke: f64 = k.iter().zip(eta).map(|(a, b)| *a as f64 * b).sum();
    let ne = eta.iter().map(|x| x * x).sum::<f64>().sqrt();
    -ke / jk.powf(p) * chi(ne / jk.powf(q))
}

/// ∇_η λ_k(η) in closed form.
pub fn lambda_gradient(k: &[i64], eta: &[f64], s: f64) -> Vec<f64> {
    let (p, q) = exponents(s);
    let jk = jap2(k).sqrt();
    let ke: f64 = k.iter().zip(eta).map(|(a, b)| *a as f64 * b).sum();
    let ne = eta.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r = ne / jk.powf(q);
    let c = chi(r);
    let dc = if ne > 0.0 { dchi(r) / (ne * jk.powf(q)) } else { 0.0 };
    k.iter()
        .zip(eta)
        .map(|(kj, ej)| -(*kj as f64 * c + ke * dc * ej) / jk.powf(p))
        .collect()
}

/// −Σ_j k_j ∂_{η_j}λ_k(η), the symbol of the commutator with i v·k.
pub fn commutator_symbol(k: &[i64], eta: &[f64], s: f64) -> f64 {
    -lambda_gradient(k, eta, s)
        .iter()
        .zip(k)
        .map(|(g, kj)| g * *kj as f64)
        .sum::<f64>()
}

/// Velocity-spectral multiplication by 1 + c₀λ_k(η).
pub fn apply_m(col: &[C64], grid: &VelocityGrid, k: &[i64], c0: f64, s: f64) -> Result<Vec<C64>> {
    if k.len() != grid.dim {
        return Err(LabError::DimensionMismatch("k and velocity dimension differ".into()));
    }
    if !(0.0..1.0).contains(&c0) {
        return Err(LabError::InvalidParam("c0 must lie in [0,1)".into()));
    }
    let fft = VelocityFft::new(grid);
    let mut buf = col.to_vec();
    fft.forward(&mut buf);
    let de = grid.deta();
    for (idx, z) in buf.iter_mut().enumerate() {
        let eta: Vec<f64> = grid.freq_indices(idx).iter().map(|&j| j as f64 * de).collect();
        *z *= 1.0 + c0 * lambda_symbol(k, &eta, s);
    }
    fft.inverse(&mut buf);
    Ok(buf)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRanges {
    pub dim: usize,
    pub k_max: i64,
    /// Radial samples per direction on |η| ∈ [0, 3⟨k⟩^{1/(1+2s)}].
    pub n_radial: usize,
    /// Random directions per k (the direction k/|k| is always included).
    pub n_dirs: usize,
    pub seed: u64,
}

impl ScanRanges {
    pub fn doubled(&self) -> Self {
        Self { n_radial: 2 * self.n_radial, n_dirs: 2 * self.n_dirs, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub k: Vec<i64>,
    /// Smallest C with −k·∇λ ≥ ⟨k⟩^{2s/(1+2s)} − C⟨η⟩^{2s} on this k's samples.
    pub admissible_c: f64,
    /// min over plateau samples of −k·∇λ − (⟨k⟩^{2s/(1+2s)} − 1).
    pub plateau_margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolScan {
    pub s: f64,
    pub admissible_c: f64,
    pub max_abs_lambda: f64,
    /// max |∂^α λ| for |α| = 1 and |α| = 2 over the scan.
    pub max_d1: f64,
    pub max_d2: f64,
    /// Samples with |λ| > 1.
    pub lambda_violations: usize,
    /// k values whose plateau margin is negative.
    pub plateau_violations: usize,
    pub rows: Vec<ScanRow>,
}

fn k_lattice(dim: usize, k_max: i64) -> Vec<Vec<i64>> {
    let side = (2 * k_max + 1) as usize;
    (0..side.pow(dim as u32))
        .map(|mut i| {
            let mut k = vec![0; dim];
            for a in (0..dim).rev() {
                k[a] = (i % side) as i64 - k_max;
                i /= side;
            }
            k
        })
        .collect()
}

/// Second derivatives by centered differences of the closed-form gradient.
fn hessian_max(k: &[i64], eta: &[f64], s: f64) -> f64 {
    let h = 1e-5;
    let mut m: f64 = 0.0;
    for j in 0..eta.len() {
        let mut a = eta.to_vec();
        let mut b = eta.to_vec();
        a[j] += h;
        b[j] -= h;
        let (ga, gb) = (lambda_gradient(k, &a, s), lambda_gradient(k, &b, s));
        for (x, y) in ga.iter().zip(&gb) {
            m = m.max(((x - y) / (2.0 * h)).abs());
        }
    }
    m
}

/// sup_r rχ(r) on [1, 2]; sup_η |λ_k(η)| = (|k|/⟨k⟩)·this, which exceeds 1 for large |k|
/// because χ is flat at r = 1.
pub fn chi_moment_sup() -> f64 {
    let f = |r: f64| -(r * chi(r));
    let (_, v) = crate::quad::golden_min(f, 1.0, 2.0, 1e-12);
    -v
}

pub fn symbol_bound_scan(s: f64, ranges: &ScanRanges) -> Result<SymbolScan> {
    if !(s > 0.0 && s < 1.0) {
        return Err(LabError::InvalidParam("s must lie in (0,1)".into()));
    }
    let (_, q) = exponents(s);
    let gain = 2.0 * s / (1.0 + 2.0 * s);
    let mut rng = ChaCha8Rng::seed_from_u64(ranges.seed);
    let dim = ranges.dim;
    let mut rows = Vec::new();
    let (mut max_l, mut max_d1, mut max_d2) = (0.0f64, 0.0f64, 0.0f64);
    let (mut lambda_violations, mut plateau_violations) = (0, 0);
    for k in k_lattice(dim, ranges.k_max) {
        let jk2 = jap2(&k);
        let knorm = (jk2 - 1.0).sqrt();
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        if knorm > 0.0 {
            dirs.push(k.iter().map(|&x| x as f64 / knorm).collect());
        }
        for _ in 0..ranges.n_dirs {
            let mut d: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = d.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            d.iter_mut().for_each(|x| *x /= n);
            dirs.push(d);
        }
        let rmax = 3.0 * jk2.powf(0.5 * q);
        let target = jk2.powf(0.5 * gain);
        let mut c_k: f64 = 0.0;
        let mut margin = f64::INFINITY;
        for d in &dirs {
            for i in 0..=ranges.n_radial {
                let r = rmax * i as f64 / ranges.n_radial as f64;
                let eta: Vec<f64> = d.iter().map(|x| x * r).collect();
                let l = lambda_symbol(&k, &eta, s);
                max_l = max_l.max(l.abs());
                if l.abs() > 1.0 + 1e-12 {
                    lambda_violations += 1;
                }
                let g = lambda_gradient(&k, &eta, s);
                max_d1 = max_d1.max(g.iter().fold(0.0, |a: f64, x| a.max(x.abs())));
                max_d2 = max_d2.max(hessian_max(&k, &eta, s));
                let dsym = commutator_symbol(&k, &eta, s);
                let je = (1.0 + r * r).powf(s);
                c_k = c_k.max((target - dsym) / je);
                if r <= jk2.powf(0.5 * q) {
                    margin = margin.min(dsym - (target - 1.0));
                }
            }
        }
        if margin < -1e-12 {
            plateau_violations += 1;
        }
        rows.push(ScanRow { k, admissible_c: c_k.max(0.0), plateau_margin: margin });
    }
    let admissible_c = rows.iter().map(|r| r.admissible_c).fold(0.0, f64::max);
    Ok(SymbolScan { s, admissible_c, max_abs_lambda: max_l, max_d1, max_d2, lambda_violations, plateau_violations, rows })
}

/// Both sides of the integrated identity
/// ∫₀ᵀ∫(−k·∇λ)|F|² = [∫λ|F|²]₀ᵀ + 2∫₀ᵀ∫λ|η|^{2s}|F|²
/// and of the gain bound ⟨k⟩^{2s/(1+2s)}∫₀ᵀ∫|F|² ≤ ∫₀ᵀ∫(−k·∇λ)|F|² + C∫₀ᵀ∫⟨η⟩^{2s}|F|²
/// along the exact d = 1 Kolmogorov trajectory F(t,η) = F₀(η+kt)e^{−I(t,k,η)}.
#[derive(Clone, Debug, PartialEq)]
pub struct Bookkeeping {
    pub commutator: f64,
    pub boundary: f64,
    pub dissipative: f64,
    pub gain: f64,
    pub bound_rhs: f64,
}

impl Bookkeeping {
    pub fn identity_defect(&self) -> f64 {
        (self.commutator - self.boundary - self.dissipative).abs()
            / (self.commutator.abs() + self.boundary.abs() + self.dissipative.abs()).max(f64::MIN_POSITIVE)
    }
}

pub fn energy_bookkeeping(init: &AnalyticState, k: i64, s: f64, t_end: f64, c_bound: f64) -> Result<Bookkeeping> {
    if init.d_x != 1 || init.d_v != 1 {
        return Err(LabError::DimensionMismatch("bookkeeping runs in d = 1".into()));
    }
    let wmin = init.terms.iter().map(|t| t.width).fold(f64::INFINITY, f64::min);
    let (_, q) = exponents(s);
    let half = 2.0 * jap2(&[k]).powf(0.5 * q) + (k as f64).abs() * t_end + 14.0 / wmin;
    let panels = 240;
    let mut eta_rule: Vec<(f64, f64)> = Vec::new();
    for p in 0..panels {
        let a = -half + 2.0 * half * p as f64 / panels as f64;
        let b = a + 2.0 * half / panels as f64;
        let r = gauss_legendre(10, a, b);
        eta_rule.extend(r.nodes.into_iter().zip(r.weights));
    }
    let kk = [k as f64];
    let f_at = |t: f64, e: f64| -> f64 {
        let f0 = init.spectrum(&[k], &[e + k as f64 * t]);
        (f0 * (-exponent_integral(t, &kk, &[e], s)).exp()).norm_sqr()
    };
    let slice = |t: f64| -> (f64, f64, f64, f64, f64) {
        let (mut a, mut b, mut c, mut d, mut e) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(eta, w) in &eta_rule {
            let f2 = f_at(t, eta) * w;
            let l = lambda_symbol(&[k], &[eta], s);
            a += commutator_symbol(&[k], &[eta], s) * f2;
            b += l * f2;
            c += 2.0 * l * eta.abs().powf(2.0 * s) * f2;
            d += f2;
            e += (1.0 + eta * eta).powf(s) * f2;
        }
        (a, b, c, d, e)
    };
    let tr = {
        let mut v = Vec::new();
        let n = 24;
        for p in 0..n {
            let a = t_end * p as f64 / n as f64;
            let r = gauss_legendre(8, a, a + t_end / n as f64);
            v.extend(r.nodes.into_iter().zip(r.weights));
        }
        v
    };
    let (mut com, mut dis, mut l2, mut hs) = (0.0, 0.0, 0.0, 0.0);
    for &(t, w) in &tr {
        let (a, _, c, d, e) = slice(t);
        com += w * a;
        dis += w * c;
        l2 += w * d;
        hs += w * e;
    }
    let boundary = slice(t_end).1 - slice(0.0).1;
    let norm = 1.0 / (2.0 * std::f64::consts::PI);
    let gain = jap2(&[k]).powf(s / (1.0 + 2.0 * s)) * l2 * norm;
    Ok(Bookkeeping {
        commutator: com * norm,
        boundary: boundary * norm,
        dissipative: dis * norm,
        gain,
        bound_rhs: (com + c_bound * hs) * norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::Poly;
    use crate::fields::sample_analytic;
    use crate::fields::ModeSet;
    use proptest::prelude::*;

    #[test]
    fn chi_shape() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(-1.0), 1.0);
        assert_eq!(chi(2.0), 0.0);
        assert_eq!(chi(2.5), 0.0);
        let mut prev = 1.0;
        for i in 1..=200 {
            let c = chi(1.0 + i as f64 / 200.0);
            assert!((0.0..=1.0).contains(&c) && c <= prev);
            prev = c;
        }
        let h = 1e-6;
        for r in [1.2, 1.5, 1.8, -1.4] {
            assert!((dchi(r) - (chi(r + h) - chi(r - h)) / (2.0 * h)).abs() < 1e-7);
        }
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda_symbol(&[0, 0, 0], &[1.0, 2.0, 3.0], 0.5), 0.0);
        let s = 0.5;
        let k = [3i64, -1, 2];
        let jk = 15f64.sqrt();
        let r = 2.0 * jk.powf(1.0 / (1.0 + 2.0 * s)) + 1e-9;
        assert_eq!(lambda_symbol(&k, &[r, 0.0, 0.0], s), 0.0);
        let v = lambda_symbol(&[1, 0, 0], &[1.0, 0.0, 0.0], 0.5);
        assert!((v + 2f64.powf(-0.75)).abs() < 1e-15);
    }

    #[test]
    fn plateau_value_is_closed_form() {
        let s = 0.25;
        let (p, q) = exponents(s);
        for k in [[1i64, 0, 0], [2, -3, 1], [0, 5, 5]] {
            let jk = jap2(&k).sqrt();
            let k2 = jap2(&k) - 1.0;
            let eta = [0.3 * jk.powf(q), -0.2 * jk.powf(q), 0.1 * jk.powf(q)];
            let d = commutator_symbol(&k, &eta, s);
            assert!((d - k2 / jk.powf(p)).abs() < 1e-13 * d);
            assert!(d >= jk.powf(2.0 * s / (1.0 + 2.0 * s)) - 1.0);
        }
    }

    proptest! {
        #[test]
        fn gradient_matches_differences(k in prop::array::uniform3(-6i64..=6), e in prop::array::uniform3(-5.0..5.0f64), s in 0.1..0.9f64) {
            let g = lambda_gradient(&k, &e, s);
            let h = 1e-6;
            for j in 0..3 {
                let (mut a, mut b) = (e, e);
                a[j] += h;
                b[j] -= h;
                let fd = (lambda_symbol(&k, &a, s) - lambda_symbol(&k, &b, s)) / (2.0 * h);
                prop_assert!((fd - g[j]).abs() < 1e-6);
            }
        }

        #[test]
        fn lambda_is_bounded_by_chi_moment(k in prop::array::uniform3(-20i64..=20), e in prop::array::uniform3(-20.0..20.0f64), s in 0.1..0.9f64) {
            let kn = (jap2(&k) - 1.0).sqrt();
            let bound = kn / jap2(&k).sqrt() * chi_moment_sup();
            prop_assert!(lambda_symbol(&k, &e, s).abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn chi_moment_exceeds_one() {
        let m = chi_moment_sup();
        assert!(m > 1.0 && m < 2.0, "{m}");
    }

    #[test]
    fn scan_constant_is_stable_and_plateau_holds() {
        let r = ScanRanges { dim: 1, k_max: 12, n_radial: 200, n_dirs: 4, seed: 3 };
        for s in [0.25, 0.5, 0.75] {
            let a = symbol_bound_scan(s, &r).unwrap();
            let b = symbol_bound_scan(s, &r.doubled()).unwrap();
            assert_eq!(a.plateau_violations, 0);
            assert!(a.admissible_c > 0.0 && (a.admissible_c - b.admissible_c).abs() < 0.05 * b.admissible_c);
            assert!(a.max_d1.is_finite() && a.max_d2.is_finite());
        }
        assert!(symbol_bound_scan(1.0, &r).is_err());
    }

    #[test]
    fn multiplier_norm_and_identities() {
        let grid = VelocityGrid::new(1, 128, 12.0).unwrap();
        let st = AnalyticState::term(&[0], Poly::var(1, 0), &[0.7], 0.6);
        let f = sample_analytic(&st, &ModeSet::new(1, 0), &grid).unwrap();
        let col = f.column(0).to_vec();
        let nrm = |c: &[C64]| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let id = apply_m(&col, &grid, &[0], 0.25, 0.5).unwrap();
        assert!(col.iter().zip(&id).all(|(a, b)| (a - b).norm() < 1e-12));
        let id = apply_m(&col, &grid, &[3], 0.0, 0.5).unwrap();
        assert!(col.iter().zip(&id).all(|(a, b)| (a - b).norm() < 1e-12));
        for k in [1i64, 4, 20] {
            let m = apply_m(&col, &grid, &[k], 0.25, 0.5).unwrap();
            let lam = (k as f64) / ((1 + k * k) as f64).sqrt() * chi_moment_sup();
            assert!(nrm(&m) <= (1.0 + 0.25 * lam) * nrm(&col) + 1e-12);
            if k == 1 {
                assert!(nrm(&m) <= 1.25 * nrm(&col));
            }
        }
        assert!(apply_m(&col, &grid, &[1], 1.0, 0.5).is_err());
    }

    #[test]
    fn bookkeeping_identity_and_gain_bound() {
        let init = crate::kolmogorov::gaussian_packet(3);
        for s in [0.25, 0.5, 0.75] {
            let c = symbol_bound_scan(s, &ScanRanges { dim: 1, k_max: 4, n_radial: 400, n_dirs: 0, seed: 1 })
                .unwrap()
                .admissible_c;
            let b = energy_bookkeeping(&init, 2, s, 1.0, c).unwrap();
            assert!(b.identity_defect() < 1e-6, "{s}: {:e}", b.identity_defect());
            assert!(b.gain <= b.bound_rhs);
        }
    }
}
