//! Macro–micro decomposition in d_v = 3: the projection P, the moment functionals Θ and Λ,
//! residuals of the fluid-type moment system, and the interaction functional 𝒦.

use crate::analytic::{AnalyticState, Poly};
use crate::error::{LabError, Result};
use crate::fields::{sqrt_maxwellian, KvField, VelocityGrid};
use crate::vector_fields::{apply_op_analytic, FieldOp};
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const Z: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MacroCoefficients {
    pub a: C64,
    pub b: [C64; 3],
    pub c: C64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentTensors {
    pub theta: [[C64; 3]; 3],
    pub lambda: [C64; 3],
}

/// ∫ v^α μ^{1/2} f dv for |α| ≤ 3, plus ∫|v|² v_i v_j μ^{1/2} f dv.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawMoments {
    pub m0: C64,
    pub m1: [C64; 3],
    pub m2: [[C64; 3]; 3],
    pub m3: [[[C64; 3]; 3]; 3],
    pub m4: [[C64; 3]; 3],
}

impl RawMoments {
    fn zero() -> Self {
        Self { m0: Z, m1: [Z; 3], m2: [[Z; 3]; 3], m3: [[[Z; 3]; 3]; 3], m4: [[Z; 3]; 3] }
    }

    pub fn macro_coefficients(&self) -> MacroCoefficients {
        let tr = self.m2[0][0] + self.m2[1][1] + self.m2[2][2];
        MacroCoefficients { a: self.m0, b: self.m1, c: (tr - 3.0 * self.m0) / 6.0 }
    }

    pub fn theta_lambda(&self) -> MomentTensors {
        let mut theta = [[Z; 3]; 3];
        let mut lambda = [Z; 3];
        for j in 0..3 {
            for l in 0..3 {
                theta[j][l] = self.m2[j][l] - self.m0;
            }
            let r2vj: C64 = (0..3).map(|i| self.m3[i][i][j]).sum();
            lambda[j] = (r2vj - 5.0 * self.m1[j]) / 10.0;
        }
        MomentTensors { theta, lambda }
    }

    /// Θ_jl(v_i f) as [i][j][l] and Λ_j(v_i f) as [i][j].
    fn shifted(&self) -> ([[[C64; 3]; 3]; 3], [[C64; 3]; 3]) {
        let mut th = [[[Z; 3]; 3]; 3];
        let mut la = [[Z; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    th[i][j][l] = self.m3[i][j][l] - self.m1[i];
                }
                la[i][j] = (self.m4[i][j] - 5.0 * self.m2[i][j]) / 10.0;
            }
        }
        (th, la)
    }
}

fn poly_list() -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut e = |v: &[usize]| {
        let mut x = vec![0u32; 3];
        for &i in v {
            x[i] += 1;
        }
        out.push(x);
    };
    e(&[]);
    for i in 0..3 {
        e(&[i]);
    }
    for i in 0..3 {
        for j in 0..3 {
            e(&[i, j]);
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            for l in 0..3 {
                e(&[i, j, l]);
            }
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            for a in 0..3 {
                e(&[i, j, a, a]);
            }
        }
    }
    out
}

fn assemble(vals: impl Fn(&[u32]) -> C64) -> RawMoments {
    let mut r = RawMoments::zero();
    let mono = |v: &[usize]| {
        let mut x = [0u32; 3];
        for &i in v {
            x[i] += 1;
        }
        x
    };
    r.m0 = vals(&[0, 0, 0]);
    for i in 0..3 {
        r.m1[i] = vals(&mono(&[i]));
        for j in 0..3 {
            r.m2[i][j] = vals(&mono(&[i, j]));
            r.m4[i][j] = (0..3).map(|a| vals(&mono(&[i, j, a, a]))).sum();
            for l in 0..3 {
                r.m3[i][j][l] = vals(&mono(&[i, j, l]));
            }
        }
    }
    r
}

/// Exact moments of the k-mode of an analytic state.
pub fn raw_moments_analytic(f: &AnalyticState, k: &[i64]) -> Result<RawMoments> {
    if f.d_v != 3 {
        return Err(LabError::DimensionMismatch("macro-micro needs d_v = 3".into()));
    }
    let mut cache: Vec<([u32; 3], C64)> = Vec::new();
    for e in poly_list() {
        let e3 = [e[0], e[1], e[2]];
        if cache.iter().any(|(x, _)| *x == e3) {
            continue;
        }
        let w = AnalyticState::poly_times_sqrt_mu(f.d_x, Poly::monomial(&e, 1.0));
        let mut w = w;
        for t in &mut w.terms {
            t.k = k.to_vec();
        }
        cache.push((e3, w.inner_v(f, k)));
    }
    Ok(assemble(|e| cache.iter().find(|(x, _)| x == e).map(|(_, v)| *v).unwrap_or(Z)))
}

/// Grid moments of a velocity column (trapezoid on the periodized box).
pub fn raw_moments_column(col: &[C64], grid: &VelocityGrid) -> Result<RawMoments> {
    if grid.dim != 3 {
        return Err(LabError::DimensionMismatch("macro-micro needs d_v = 3".into()));
    }
    let mut acc = [[[Z; 5]; 5]; 5];
    let h3 = grid.cell();
    for (idx, f) in col.iter().enumerate() {
        let v = grid.point(idx);
        let w = *f * (sqrt_maxwellian(&v) * h3);
        let mut p0 = 1.0;
        for a in 0..5 {
            let mut p1 = p0;
            for b in 0..5 - a {
                let mut p2 = p1;
                for c in 0..5 - a - b {
                    acc[a][b][c] += w * p2;
                    p2 *= v[2];
                }
                p1 *= v[1];
            }
            p0 *= v[0];
        }
    }
    Ok(assemble(|e| acc[e[0] as usize][e[1] as usize][e[2] as usize]))
}

/// {a + b·v + c(|v|²−3)}μ^{1/2} as a state on the k-mode.
pub fn macro_state(m: &MacroCoefficients, d_x: usize, k: &[i64]) -> AnalyticState {
    let mut p = Poly::constant(3, m.a - 3.0 * m.c);
    for i in 0..3 {
        p = p.add(&Poly::var(3, i).scale(m.b[i]));
    }
    p = p.add(&Poly::norm_sq(3).scale(m.c));
    let mut s = AnalyticState::poly_times_sqrt_mu(d_x, p);
    for t in &mut s.terms {
        t.k = k.to_vec();
    }
    s.simplify()
}

/// (coefficients, microscopic remainder) of the k-mode.
pub fn project_p(f: &AnalyticState, k: &[i64]) -> Result<(MacroCoefficients, AnalyticState)> {
    let m = raw_moments_analytic(f, k)?.macro_coefficients();
    let k0 = vec![0; f.d_x];
    let mut rem = f.mode(k).add(&macro_state(&m, f.d_x, &k0).scale(C64::new(-1.0, 0.0))).simplify();
    for t in &mut rem.terms {
        t.k = k.to_vec();
    }
    Ok((m, rem))
}

/// (I−P)h applied mode by mode.
pub fn micro_part(h: &AnalyticState) -> AnalyticState {
    let mut out = AnalyticState::zero(h.d_x, h.d_v);
    for k in h.modes() {
        let (_, r) = project_p(h, &k).expect("d_v = 3");
        out = out.add(&r);
    }
    out.simplify()
}

/// (coefficients, microscopic remainder) of a gridded column.
pub fn project_p_column(col: &[C64], grid: &VelocityGrid) -> Result<(MacroCoefficients, Vec<C64>)> {
    let m = raw_moments_column(col, grid)?.macro_coefficients();
    let rem = col
        .iter()
        .enumerate()
        .map(|(idx, f)| {
            let v = grid.point(idx);
            let r2: f64 = v.iter().map(|x| x * x).sum();
            let p = m.a + m.b[0] * v[0] + m.b[1] * v[1] + m.b[2] * v[2] + m.c * (r2 - 3.0);
            f - p * sqrt_maxwellian(&v)
        })
        .collect();
    Ok((m, rem))
}

pub fn moments_theta_lambda(f: &AnalyticState, k: &[i64]) -> Result<MomentTensors> {
    Ok(raw_moments_analytic(f, k)?.theta_lambda())
}

/// Θ, Λ of the microscopic part, from moments of the full function.
/// Θ_jl(Pf) = (δ_jl − 1)a + 2δ_jl c and Λ(Pf) = 0.
pub fn micro_moments(r: &RawMoments) -> MomentTensors {
    let m = r.macro_coefficients();
    let mut t = r.theta_lambda();
    for j in 0..3 {
        for l in 0..3 {
            let d = if j == l { 1.0 } else { 0.0 };
            t.theta[j][l] -= (d - 1.0) * m.a + 2.0 * d * m.c;
        }
    }
    t
}

/// Macroscopic coefficients of op^m f at time t (the a_m, b_m, c_m or U_m, V_m, W_m families).
pub fn macro_of_field_op(f: &AnalyticState, op: &FieldOp, t: f64, k: &[i64]) -> Result<MacroCoefficients> {
    let g = apply_op_analytic(op, f, t)?;
    Ok(raw_moments_analytic(&g, k)?.macro_coefficients())
}

/// 𝒦 at one wavenumber from the macroscopic coefficients and the microscopic moments.
pub fn interaction_functional_k(m: &MacroCoefficients, micro: &MomentTensors, k: &[i64], rho0: f64) -> C64 {
    let kk: Vec<f64> = k.iter().map(|&x| x as f64).collect();
    let ik = |j: usize| I * kk.get(j).copied().unwrap_or(0.0);
    let w = 1.0 / (1.0 + kk.iter().map(|x| x * x).sum::<f64>());
    let mut acc = Z;
    for j in 0..3 {
        for l in 0..3 {
            let d = if j == l { 2.0 } else { 0.0 };
            let left = ik(j) * m.b[l] + ik(l) * m.b[j];
            acc += left * (micro.theta[j][l] + d * m.c).conj();
        }
    }
    for j in 0..3 {
        acc += rho0 * micro.lambda[j] * (ik(j) * m.c).conj();
        acc += m.b[j] * (ik(j) * m.a).conj();
    }
    acc * w
}

/// 𝒦 of the k-mode of an analytic state.
pub fn interaction_functional_state(f: &AnalyticState, k: &[i64], rho0: f64) -> Result<C64> {
    let r = raw_moments_analytic(f, k)?;
    Ok(interaction_functional_k(&r.macro_coefficients(), &micro_moments(&r), k, rho0))
}

/// Random single-mode state: a cubic polynomial times a shifted Gaussian on a random k.
pub fn random_mode_state(rng: &mut ChaCha8Rng, k_max: i64) -> AnalyticState {
    let k: Vec<i64> = (0..3).map(|_| rng.gen_range(-k_max..=k_max)).collect();
    let mut p = Poly::zero(3);
    for e in poly_list().into_iter().take(20) {
        p.add_term(e, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    }
    let center: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect();
    AnalyticState::term(&k, p, &center, rng.gen_range(0.7..1.5)).simplify()
}

/// max |𝒦(f̂)|/‖f̂‖²_{L²_v} over `n` random states: the measured constant of the 𝒦 bound.
pub fn k_bound_probe(rho0: f64, n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c: f64 = 0.0;
    for _ in 0..n {
        let f = random_mode_state(&mut rng, 4);
        let k = f.terms[0].k.clone();
        let n2 = f.l2_v(&k).powi(2);
        c = c.max(interaction_functional_state(&f, &k, rho0)?.norm() / n2);
    }
    Ok(c)
}

/// Moments of the source G at (snapshot, k): ∫φG for φ ∈ {√μ, v√μ, (|v|²−3)√μ/6}, Θ(G), Λ(G).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceMoments {
    pub coeffs: MacroCoefficients,
    pub tensors: MomentTensors,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluidResidual {
    pub order: usize,
    /// RMS residual of each of the five equations over interior snapshots and modes.
    pub eq: [f64; 5],
    /// RMS of ‖f̂‖_{L²_v} over the same snapshots.
    pub scale: f64,
}

impl FluidResidual {
    pub fn max_relative(&self) -> f64 {
        self.eq.iter().cloned().fold(0.0, f64::max) / self.scale.max(f64::MIN_POSITIVE)
    }
}

struct SnapMoments {
    m: MacroCoefficients,
    micro: MomentTensors,
    th_r: [[C64; 3]; 3],
    la_r: [C64; 3],
}

/// Residuals of the five moment equations at m = 0 with centered differences in t.
pub fn fluid_residual(
    snapshots: &[KvField],
    times: &[f64],
    order: usize,
    source: Option<&dyn Fn(usize, &[i64]) -> SourceMoments>,
) -> Result<FluidResidual> {
    if snapshots.is_empty() {
        return Err(LabError::EmptyTrajectory);
    }
    if snapshots.len() != times.len() {
        return Err(LabError::DimensionMismatch("snapshots vs times".into()));
    }
    let half = match order {
        2 => 1,
        4 => 2,
        _ => return Err(LabError::InvalidParam("difference order must be 2 or 4".into())),
    };
    if times.len() < 2 * half + 1 {
        return Err(LabError::InsufficientData("too few snapshots".into()));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(LabError::NonUniformGrid);
    }
    let modes = &snapshots[0].modes;
    if modes.dim > 3 || snapshots[0].grid.dim != 3 {
        return Err(LabError::DimensionMismatch("fluid residual needs d_v = 3".into()));
    }
    let grid = &snapshots[0].grid;
    let mut table: Vec<Vec<SnapMoments>> = Vec::with_capacity(snapshots.len());
    for f in snapshots {
        let mut row = Vec::with_capacity(modes.len());
        for mi in 0..modes.len() {
            let k = modes.k(mi);
            let (m, rem) = project_p_column(f.column(mi), grid)?;
            let rm = raw_moments_column(&rem, grid)?;
            let micro = rm.theta_lambda();
            let (th_v, la_v) = rm.shifted();
            let mut th_r = [[Z; 3]; 3];
            let mut la_r = [Z; 3];
            for (i, &ki) in k.iter().enumerate() {
                let c = -I * ki as f64;
                for j in 0..3 {
                    for l in 0..3 {
                        th_r[j][l] += c * th_v[i][j][l];
                    }
                    la_r[j] += c * la_v[i][j];
                }
            }
            row.push(SnapMoments { m, micro, th_r, la_r });
        }
        table.push(row);
    }
    let weights: &[(isize, f64)] = if order == 2 {
        &[(-1, -0.5), (1, 0.5)]
    } else {
        &[(-2, 1.0 / 12.0), (-1, -2.0 / 3.0), (1, 2.0 / 3.0), (2, -1.0 / 12.0)]
    };
    let ddt = |n: usize, mi: usize, get: &dyn Fn(&SnapMoments) -> C64| -> C64 {
        weights
            .iter()
            .map(|&(o, w)| get(&table[(n as isize + o) as usize][mi]) * w)
            .sum::<C64>()
            / dt
    };
    let mut sums = [0.0; 5];
    let mut scale = 0.0;
    let mut count = 0usize;
    for n in half..snapshots.len() - half {
        count += 1;
        scale += snapshots[n].l2().powi(2);
        for mi in 0..modes.len() {
            let k = modes.k(mi);
            let ik = |j: usize| I * k.get(j).copied().unwrap_or(0) as f64;
            let cur = &table[n][mi];
            let src = source.map(|s| s(n, &k));
            let sc = src.map(|s| s.coeffs).unwrap_or(MacroCoefficients { a: Z, b: [Z; 3], c: Z });
            let st = src.map(|s| s.tensors).unwrap_or(MomentTensors { theta: [[Z; 3]; 3], lambda: [Z; 3] });
            let divb: C64 = (0..3).map(|j| ik(j) * cur.m.b[j]).sum();
            let e1 = ddt(n, mi, &|s| s.m.a) + divb - sc.a;
            sums[0] += e1.norm_sqr();
            for j in 0..3 {
                let divth: C64 = (0..3).map(|l| ik(l) * cur.micro.theta[j][l]).sum();
                let e2 = ddt(n, mi, &|s| s.m.b[j]) + ik(j) * (cur.m.a + 2.0 * cur.m.c) + divth - sc.b[j];
                sums[1] += e2.norm_sqr();
            }
            let divla: C64 = (0..3).map(|j| ik(j) * cur.micro.lambda[j]).sum();
            let e3 = ddt(n, mi, &|s| s.m.c) + divb / 3.0 + divla * (5.0 / 3.0) - sc.c;
            sums[2] += e3.norm_sqr();
            for j in 0..3 {
                for l in 0..3 {
                    let d = if j == l { 2.0 } else { 0.0 };
                    let e4 = ddt(n, mi, &|s| s.micro.theta[j][l] + d * s.m.c) + ik(j) * cur.m.b[l]
                        + ik(l) * cur.m.b[j]
                        - cur.th_r[j][l]
                        - st.theta[j][l];
                    sums[3] += e4.norm_sqr();
                }
                let e5 = ddt(n, mi, &|s| s.micro.lambda[j]) + ik(j) * cur.m.c - cur.la_r[j] - st.lambda[j];
                sums[4] += e5.norm_sqr();
            }
        }
    }
    let c = count as f64;
    Ok(FluidResidual {
        order,
        eq: sums.map(|x| (x / c).sqrt()),
        scale: (scale / c).sqrt(),
    })
}

/// f̂(t,k,v) = e^{−ik·v t} f̂(0,k,v): the free-transport trajectory of a gridded state.
pub fn transport_trajectory(init: &KvField, times: &[f64]) -> Result<Vec<KvField>> {
    let d = init.modes.dim;
    if d != init.grid.dim {
        return Err(LabError::DimensionMismatch("transport needs d_x = d_v".into()));
    }
    let nv = init.grid.len();
    let pts: Vec<Vec<f64>> = (0..nv).map(|i| init.grid.point(i)).collect();
    Ok(times
        .iter()
        .map(|&t| {
            let mut f = init.clone();
            f.time_tag = t;
            for mi in 0..init.modes.len() {
                let k = init.modes.k(mi);
                for (val, v) in f.column_mut(mi).iter_mut().zip(&pts) {
                    let ph: f64 = k.iter().zip(v).map(|(a, b)| *a as f64 * b).sum();
                    *val *= C64::from_polar(1.0, -ph * t);
                }
            }
            f
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{sample_analytic, ModeSet};

    fn close(a: C64, b: f64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn p(e: &[u32]) -> AnalyticState {
        AnalyticState::poly_times_sqrt_mu(3, Poly::monomial(e, 1.0))
    }

    #[test]
    fn projection_examples() {
        let k = [0, 0, 0];
        let (m, _) = project_p(&p(&[0, 0, 0]), &k).unwrap();
        assert!(close(m.a, 1.0, 1e-12) && m.b.iter().all(|x| close(*x, 0.0, 1e-12)) && close(m.c, 0.0, 1e-12));
        let (m, _) = project_p(&p(&[1, 0, 0]), &k).unwrap();
        assert!(close(m.a, 0.0, 1e-12) && close(m.b[0], 1.0, 1e-12) && close(m.b[1], 0.0, 1e-12) && close(m.c, 0.0, 1e-12));
        let r2 = AnalyticState::poly_times_sqrt_mu(3, Poly::norm_sq(3));
        let (m, rem) = project_p(&r2, &k).unwrap();
        assert!(close(m.a, 3.0, 1e-12) && close(m.c, 1.0, 1e-12));
        assert!(rem.l2_v(&k) < 1e-12);
    }

    #[test]
    fn theta_lambda_examples() {
        let t = moments_theta_lambda(&p(&[0, 0, 0]), &[0, 0, 0]).unwrap();
        for j in 0..3 {
            for l in 0..3 {
                assert!(close(t.theta[j][l], if j == l { 0.0 } else { -1.0 }, 1e-12));
            }
            assert!(close(t.lambda[j], 0.0, 1e-12));
        }
        let t = moments_theta_lambda(&p(&[1, 0, 0]), &[0, 0, 0]).unwrap();
        assert!(t.lambda.iter().all(|x| close(*x, 0.0, 1e-12)));
    }

    #[test]
    fn projection_is_idempotent_and_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let f = random_mode_state(&mut rng, 2);
            let k = f.terms[0].k.clone();
            let (m, rem) = project_p(&f, &k).unwrap();
            let (m2, rem2) = project_p(&macro_state(&m, 3, &k), &k).unwrap();
            assert!((m2.a - m.a).norm() < 1e-12 && (m2.c - m.c).norm() < 1e-12);
            assert!(m.b.iter().zip(&m2.b).all(|(x, y)| (x - y).norm() < 1e-12));
            assert!(rem2.l2_v(&k) < 1e-12 * f.l2_v(&k), "{} {}", rem2.l2_v(&k), f.l2_v(&k));
            let r = raw_moments_analytic(&rem, &k).unwrap();
            let sc = f.l2_v(&k);
            let c = r.macro_coefficients();
            assert!(c.a.norm() < 1e-12 * sc && c.c.norm() < 1e-12 * sc);
            assert!(c.b.iter().all(|x| x.norm() < 1e-12 * sc));
            // Θ symmetric
            let t = r.theta_lambda();
            for j in 0..3 {
                for l in 0..3 {
                    assert!((t.theta[j][l] - t.theta[l][j]).norm() < 1e-12 * sc);
                }
            }
        }
    }

    #[test]
    fn micro_moments_subtract_the_macro_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_mode_state(&mut rng, 2);
        let k = f.terms[0].k.clone();
        let (_, rem) = project_p(&f, &k).unwrap();
        let a = micro_moments(&raw_moments_analytic(&f, &k).unwrap());
        let b = moments_theta_lambda(&rem, &k).unwrap();
        for j in 0..3 {
            for l in 0..3 {
                assert!((a.theta[j][l] - b.theta[j][l]).norm() < 1e-12 * f.l2_v(&k), "{:?} {:?}", a.theta[j][l], b.theta[j][l]);
            }
            assert!((a.lambda[j] - b.lambda[j]).norm() < 1e-12 * f.l2_v(&k));
        }
    }

    #[test]
    fn grid_moments_match_exact_moments() {
        let f = random_mode_state(&mut ChaCha8Rng::seed_from_u64(2), 0);
        let k = f.terms[0].k.clone();
        let grid = VelocityGrid::new(3, 32, 8.0).unwrap();
        let col = sample_analytic(&f, &ModeSet::new(3, 0), &grid).unwrap();
        let a = raw_moments_column(col.column(0), &grid).unwrap().macro_coefficients();
        let b = raw_moments_analytic(&f, &k).unwrap().macro_coefficients();
        assert!((a.a - b.a).norm() < 1e-10 && (a.c - b.c).norm() < 1e-10);
    }

    #[test]
    fn interaction_functional_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let mut f = random_mode_state(&mut rng, 0);
            for t in &mut f.terms {
                t.k = vec![0, 0, 0];
            }
            assert_eq!(interaction_functional_state(&f, &[0, 0, 0], 2.0).unwrap(), Z);
        }
        // purely macroscopic with a = c = 0
        let m = MacroCoefficients { a: Z, b: [C64::new(1.0, 0.5), Z, C64::new(-0.3, 0.0)], c: Z };
        let f = macro_state(&m, 3, &[1, 2, 0]);
        let kf = interaction_functional_state(&f, &[1, 2, 0], 2.0).unwrap();
        let only_b = interaction_functional_k(&m, &micro_moments(&raw_moments_analytic(&f, &[1, 2, 0]).unwrap()), &[1, 2, 0], 2.0);
        assert!((kf - only_b).norm() < 1e-12);
        let c = k_bound_probe(2.0, 200, 1).unwrap();
        assert!(c.is_finite() && c > 0.0);
    }

    #[test]
    fn fluid_residual_errors_and_zero() {
        let modes = ModeSet::new(3, 1);
        let grid = VelocityGrid::new(3, 16, 8.0).unwrap();
        assert!(matches!(fluid_residual(&[], &[], 2, None), Err(LabError::EmptyTrajectory)));
        let z = KvField::zeros(modes, grid);
        let snaps = vec![z.clone(), z.clone(), z.clone()];
        assert!(matches!(fluid_residual(&snaps, &[0.0, 0.1, 0.3], 2, None), Err(LabError::NonUniformGrid)));
        let r = fluid_residual(&snaps, &[0.0, 0.1, 0.2], 2, None).unwrap();
        assert!(r.eq.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pure_transport_residual_is_second_order() {
        let mk = |k: [i64; 3], p: Poly, c: [f64; 3], w: f64| AnalyticState::term(&k, p, &c, w);
        let init = mk([1, 0, 0], Poly::one(3), [0.3, 0.0, 0.0], 1.2)
            .add(&mk([-1, 0, 0], Poly::one(3), [0.3, 0.0, 0.0], 1.2))
            .add(&mk([0, 1, -1], Poly::var(3, 1).scale(C64::new(0.5, 0.2)), [0.0, 0.0, 0.2], 1.0))
            .add(&mk([0, -1, 1], Poly::var(3, 1).scale(C64::new(0.5, -0.2)), [0.0, 0.0, 0.2], 1.0));
        let grid = VelocityGrid::new(3, 24, 8.0).unwrap();
        let f0 = sample_analytic(&init, &ModeSet::new(3, 1), &grid).unwrap();
        let mut errs = Vec::new();
        for dt in [0.04, 0.02] {
            let times: Vec<f64> = (0..3).map(|i| 0.3 + (i as f64 - 1.0) * dt).collect();
            let tr = transport_trajectory(&f0, &times).unwrap();
            errs.push(fluid_residual(&tr, &times, 2, None).unwrap().max_relative());
            // k = 0 coefficients are conserved by transport
            let a: Vec<MacroCoefficients> = tr.iter().map(|f| project_p_column(f.column(13), &grid).unwrap().0).collect();
            assert!(a.windows(2).all(|w| (w[0].a - w[1].a).norm() < 1e-14 && (w[0].c - w[1].c).norm() < 1e-14));
            let mut sh = tr.clone();
            sh.swap(0, 2);
            assert!(fluid_residual(&sh, &times, 2, None).unwrap().max_relative() > 0.1);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 2.0).abs() < 0.1, "{errs:?}");
    }
}
