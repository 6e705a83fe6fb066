//! Time-dependent vector fields ξ(t)∂_{x₁} + θ(t)∂_{v₁} and their commutators
//! with the transport operator ∂_t + v·∂_x.

use crate::analytic::AnalyticState;
use crate::error::{LabError, Result};
use crate::fields::{apply_v_multiplier, KvField, PhaseSpectrum};
use crate::quad::binomial;
use crate::C64;
use std::ops::{Add, Mul, Sub};

/// Forward-mode dual number a + bε.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn var(v: f64) -> Self {
        Self { v, d: 1.0 }
    }

    pub fn cst(v: f64) -> Self {
        Self { v, d: 0.0 }
    }

    pub fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            return Dual::cst(1.0);
        }
        let val = self.v.powf(p);
        let der = if self.v == 0.0 {
            if p == 1.0 { 1.0 } else if p > 1.0 { 0.0 } else { f64::INFINITY }
        } else {
            p * self.v.powf(p - 1.0)
        };
        Dual { v: val, d: der * self.d }
    }

    pub fn powi(self, n: u32) -> Self {
        let mut r = Dual::cst(1.0);
        for _ in 0..n {
            r = r * self;
        }
        r
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, d: self.v * o.d + self.d * o.v }
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, o: f64) -> Dual {
        Dual { v: self.v * o, d: self.d * o }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OpKind {
    P1,
    P2,
    H,
    Hdelta(f64),
    Dx,
    Dv,
}

/// (ξ(t)∂_{x₁} + θ(t)∂_{v₁})^m.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldOp {
    pub kind: OpKind,
    pub s: f64,
    pub m: u32,
}

impl FieldOp {
    pub fn new(kind: OpKind, s: f64, m: u32) -> Self {
        Self { kind, s, m }
    }

    /// (ξ, θ) as dual numbers in t.
    pub fn coeffs_dual(&self, t: Dual) -> (Dual, Dual) {
        let s = self.s;
        match self.kind {
            OpKind::P1 => (
                t.powf((1.0 + 2.0 * s) / (2.0 * s)) * (2.0 * s / (1.0 + 2.0 * s)),
                t.powf(1.0 / (2.0 * s)),
            ),
            OpKind::P2 => (Dual::cst(0.0), t.powf(1.0 / (2.0 * s))),
            OpKind::H => (t, Dual::cst(1.0)),
            OpKind::Hdelta(d) => (t.powf(d + 1.0) * (1.0 / (d + 1.0)), t.powf(d)),
            OpKind::Dx => (Dual::cst(1.0), Dual::cst(0.0)),
            OpKind::Dv => (Dual::cst(0.0), Dual::cst(1.0)),
        }
    }

    pub fn coeffs(&self, t: f64) -> (f64, f64) {
        let (a, b) = self.coeffs_dual(Dual::cst(t));
        (a.v, b.v)
    }

    pub fn with_power(&self, m: u32) -> Self {
        Self { m, ..*self }
    }
}

fn check_t(t: f64) -> Result<()> {
    if t < 0.0 {
        return Err(LabError::InvalidParam("t must be >= 0".into()));
    }
    Ok(())
}

/// ∂_{x₁}^j ∂_{v₁}^{n} of a closed-form state.
fn mixed_derivative(f: &AnalyticState, j: u32, n: u32) -> AnalyticState {
    let mut g = f.clone();
    for _ in 0..j {
        g = g.dx(0);
    }
    for _ in 0..n {
        g = g.dv(0);
    }
    g
}

/// Σ_j c_j ∂_{x₁}^j ∂_{v₁}^{m−j} F for scalar coefficients c_j.
fn combine(f: &AnalyticState, m: u32, c: &[f64]) -> AnalyticState {
    let mut acc = AnalyticState::zero(f.d_x, f.d_v);
    for j in 0..=m {
        if c[j as usize] != 0.0 {
            acc = acc.add(&mixed_derivative(f, j, m - j).scale(C64::new(c[j as usize], 0.0)));
        }
    }
    acc.simplify()
}

fn binomial_coeffs(xi: Dual, th: Dual, m: u32) -> Vec<Dual> {
    (0..=m)
        .map(|j| xi.powi(j) * th.powi(m - j) * binomial(m, j))
        .collect()
}

/// Exact application to a closed-form state.
pub fn apply_op_analytic(op: &FieldOp, f: &AnalyticState, t: f64) -> Result<AnalyticState> {
    check_t(t)?;
    let (xi, th) = op.coeffs_dual(Dual::cst(t));
    let c: Vec<f64> = binomial_coeffs(xi, th, op.m).iter().map(|d| d.v).collect();
    Ok(combine(f, op.m, &c))
}

/// Multiplier (iξk₁ + iθη₁)^m on a partial-Fourier field; ∂_{v₁} is the
/// periodized spectral derivative with the Nyquist mode removed.
pub fn apply_op_kv(op: &FieldOp, f: &KvField, t: f64) -> Result<KvField> {
    check_t(t)?;
    let (xi, th) = op.coeffs(t);
    let mut out = f.clone();
    let de = f.grid.deta();
    let grid = f.grid.clone();
    for mi in 0..f.modes.len() {
        let k1 = f.modes.k(mi)[0] as f64;
        let m = op.m;
        apply_v_multiplier(out.column_mut(mi), &grid, |fr| {
            let eta1 = if grid.is_nyquist(fr[0]) { 0.0 } else { fr[0] as f64 * de };
            C64::new(0.0, xi * k1 + th * eta1).powu(m)
        });
    }
    Ok(out)
}

/// Multiplier (iξk₁ + iθη₁)^m on a full-Fourier spectrum.
pub fn apply_op_spectrum(op: &FieldOp, sp: &PhaseSpectrum, t: f64) -> Result<PhaseSpectrum> {
    check_t(t)?;
    let (xi, th) = op.coeffs(t);
    let mut out = sp.clone();
    let np = sp.n_points();
    for mi in 0..sp.modes.len() {
        let k1 = sp.modes.k(mi)[0] as f64;
        for j in 0..np {
            let e1 = sp.eta(j)[0];
            out.values[mi * np + j] *= C64::new(0.0, xi * k1 + th * e1).powu(op.m);
        }
    }
    Ok(out)
}

/// ∂_{x₁} = a t^{−a} P₁ − (a/t) ∂_{v₁} with a = (1+2s)/(2s).
pub fn dx_from_p1(f: &AnalyticState, t: f64, s: f64) -> Result<AnalyticState> {
    if t <= 0.0 {
        return Err(LabError::InvalidParam("reconstruction needs t > 0".into()));
    }
    let a = (1.0 + 2.0 * s) / (2.0 * s);
    let p1f = apply_op_analytic(&FieldOp::new(OpKind::P1, s, 1), f, t)?;
    let dv = f.dv(0);
    Ok(p1f
        .scale(C64::new(a * t.powf(-a), 0.0))
        .add(&dv.scale(C64::new(-a / t, 0.0)))
        .simplify())
}

/// F(t) = Σ_i α_i(t) S_i with α_i(t) = Σ c t^p.
#[derive(Clone, Debug)]
pub struct TimeFamily {
    pub parts: Vec<(Vec<(f64, f64)>, AnalyticState)>,
}

impl TimeFamily {
    fn alpha(coeffs: &[(f64, f64)], t: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for &(c, p) in coeffs {
            let x = Dual::var(t).powf(p) * c;
            v += x.v;
            d += x.d;
        }
        (v, d)
    }

    pub fn at(&self, t: f64) -> AnalyticState {
        self.combine(t, false)
    }

    /// Closed-form ∂_tF(t).
    pub fn dt_at(&self, t: f64) -> AnalyticState {
        self.combine(t, true)
    }

    fn combine(&self, t: f64, deriv: bool) -> AnalyticState {
        let (dx, dv) = (self.parts[0].1.d_x, self.parts[0].1.d_v);
        let mut acc = AnalyticState::zero(dx, dv);
        for (c, s) in &self.parts {
            let (v, d) = Self::alpha(c, t);
            acc = acc.add(&s.scale(C64::new(if deriv { d } else { v }, 0.0)));
        }
        acc.simplify()
    }
}

/// The closed-form right-hand side of [Φ^m, ∂_t + v·∂_x]F.
pub fn commutator_rhs(op: &FieldOp, f: &AnalyticState, t: f64) -> Result<AnalyticState> {
    let s = op.s;
    let m = op.m as f64;
    if op.m == 0 {
        return Ok(AnalyticState::zero(f.d_x, f.d_v));
    }
    let prev = op.with_power(op.m - 1);
    Ok(match op.kind {
        OpKind::H | OpKind::Dx => AnalyticState::zero(f.d_x, f.d_v),
        OpKind::P1 => apply_op_analytic(&prev, f, t)?
            .dv(0)
            .scale(C64::new(-(m / (2.0 * s)) * t.powf((1.0 - 2.0 * s) / (2.0 * s)), 0.0)),
        OpKind::Hdelta(d) => apply_op_analytic(&prev, f, t)?
            .dv(0)
            .scale(C64::new(-d * m * t.powf(d - 1.0), 0.0)),
        OpKind::P2 => {
            let n = op.m;
            let a = mixed_derivative(f, 0, n).scale(C64::new((m / (2.0 * s)) * t.powf(m / (2.0 * s) - 1.0), 0.0));
            let b = mixed_derivative(f, 1, n - 1).scale(C64::new(-m * t.powf(m / (2.0 * s)), 0.0));
            a.add(&b).scale(C64::new(-1.0, 0.0)).simplify()
        }
        // [∂_{v₁}^m, v·∂_x] = m∂_{x₁}∂_{v₁}^{m−1}
        OpKind::Dv => mixed_derivative(f, 1, op.m - 1).scale(C64::new(m, 0.0)),
    })
}

#[derive(Clone, Debug)]
pub struct CommutatorResidual {
    pub residual: f64,
    pub scale: f64,
    pub relative: f64,
}

/// ‖[Φ^m, ∂_t + v·∂_x]F − RHS‖_{L²_{x,v}}, with the time derivative of Φ^mF
/// taken by forward-mode differentiation of its coefficients.
pub fn commutator_residual(op: &FieldOp, fam: &TimeFamily, t: f64) -> Result<CommutatorResidual> {
    check_t(t)?;
    let m = op.m;
    let f = fam.at(t);
    let ft = fam.dt_at(t);
    // Φ^m(∂_t + v·∂_x)F
    let tf = ft.add(&f.transport()).simplify();
    let a = apply_op_analytic(op, &tf, t)?;
    // (∂_t + v·∂_x)Φ^mF
    let (xi, th) = op.coeffs_dual(Dual::var(t));
    let c = binomial_coeffs(xi, th, m);
    let cv: Vec<f64> = c.iter().map(|x| x.v).collect();
    let cd: Vec<f64> = c.iter().map(|x| x.d).collect();
    let phif = combine(&f, m, &cv);
    let dt_phif = combine(&f, m, &cd).add(&combine(&ft, m, &cv));
    let b = dt_phif.add(&phif.transport());
    let lhs = a.add(&b.scale(C64::new(-1.0, 0.0))).simplify();
    let rhs = commutator_rhs(op, &f, t)?;
    let diff = lhs.add(&rhs.scale(C64::new(-1.0, 0.0))).simplify();
    let residual = diff.l2();
    let scale = a.l2() + b.l2() + f.l2();
    Ok(CommutatorResidual { residual, scale, relative: residual / scale })
}

/// Five time-dependent test functions on 𝕋³ × ℝ³.
pub fn test_families() -> Vec<TimeFamily> {
    use crate::analytic::Poly;
    let d = 3;
    let g = |k: [i64; 3], p: Poly, c: [f64; 3], w: f64| AnalyticState::term(&k, p, &c, w);
    let half = C64::new(0.0, -0.5);
    // t·sin(x₁)e^{−|v|²/2}
    let f1 = g([1, 0, 0], Poly::one(d).scale(half), [0.0; 3], 1.0)
        .add(&g([-1, 0, 0], Poly::one(d).scale(-half), [0.0; 3], 1.0));
    // cos(x₁+x₂)v₁e^{−|v|²/2}
    let f2 = g([1, 1, 0], Poly::var(d, 0).scale(C64::new(0.5, 0.0)), [0.0; 3], 1.0)
        .add(&g([-1, -1, 0], Poly::var(d, 0).scale(C64::new(0.5, 0.0)), [0.0; 3], 1.0));
    // e^{i(2x₁−x₃)}(v₁²+v₂) shifted Gaussian
    let p3 = Poly::monomial(&[2, 0, 0], 1.0).add(&Poly::var(d, 1));
    let f3 = g([2, 0, -1], p3, [0.3, -0.2, 0.1], 0.8);
    // √μ cos x₂
    let f4 = AnalyticState::sqrt_maxwellian(3, 3).mode(&[0, 0, 0]);
    let f4 = AnalyticState {
        terms: vec![
            crate::analytic::GaussTerm { k: vec![0, 1, 0], ..f4.terms[0].clone() },
            crate::analytic::GaussTerm { k: vec![0, -1, 0], ..f4.terms[0].clone() },
        ],
        ..f4
    }
    .scale(C64::new(0.5, 0.0));
    // e^{ix₁}v₁v₃e^{−|v|²/4}
    let f5 = g([1, 0, 0], Poly::monomial(&[1, 0, 1], 1.0), [0.0; 3], 2f64.sqrt());
    vec![
        TimeFamily { parts: vec![(vec![(1.0, 1.0)], f1)] },
        TimeFamily { parts: vec![(vec![(1.0, 0.0), (1.0, 2.0)], f2)] },
        TimeFamily { parts: vec![(vec![(1.0, 1.5)], f3)] },
        TimeFamily { parts: vec![(vec![(1.0, 0.0)], f4)] },
        TimeFamily { parts: vec![(vec![(1.0, 3.0)], f5.clone()), (vec![(-0.5, 1.0)], f5.dv(0))] },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::Poly;

    #[test]
    fn dual_derivative() {
        let x = Dual::var(2.0).powf(1.5);
        assert!((x.d - 1.5 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn h_at_zero_is_dv() {
        let f = &test_families()[2].at(0.7);
        let a = apply_op_analytic(&FieldOp::new(OpKind::H, 0.5, 1), f, 0.0).unwrap();
        let diff = a.add(&f.dv(0).scale(C64::new(-1.0, 0.0))).simplify();
        assert!(diff.l2() < 1e-14);
    }

    #[test]
    fn p1_minus_p2() {
        let s = 0.3;
        let t = 1.7;
        let f = &test_families()[0].at(1.0);
        let a = apply_op_analytic(&FieldOp::new(OpKind::P1, s, 1), f, t).unwrap();
        let b = apply_op_analytic(&FieldOp::new(OpKind::P2, s, 1), f, t).unwrap();
        let c = f.dx(0).scale(C64::new(2.0 * s / (1.0 + 2.0 * s) * t.powf((1.0 + 2.0 * s) / (2.0 * s)), 0.0));
        let diff = a.add(&b.scale(C64::new(-1.0, 0.0))).add(&c.scale(C64::new(-1.0, 0.0))).simplify();
        assert!(diff.l2() < 1e-12 * c.l2());
    }

    #[test]
    fn dx_reconstruction() {
        for s in [0.25, 0.5, 0.8] {
            let f = AnalyticState::term(&[2], Poly::var(1, 0), &[0.1], 1.0);
            let r = dx_from_p1(&f, 0.9, s).unwrap();
            let diff = r.add(&f.dx(0).scale(C64::new(-1.0, 0.0))).simplify();
            assert!(diff.l2() < 1e-12 * f.dx(0).l2());
        }
    }

    #[test]
    fn h_commutator_vanishes() {
        for fam in test_families() {
            for m in 0..=4 {
                let r = commutator_residual(&FieldOp::new(OpKind::H, 0.5, m), &fam, 1.3).unwrap();
                assert!(r.relative < 1e-12, "m={m} {:?}", r);
            }
        }
    }

    #[test]
    fn p1_m1_half() {
        let fam = &test_families()[1];
        let r = commutator_residual(&FieldOp::new(OpKind::P1, 0.5, 1), fam, 0.8).unwrap();
        assert!(r.relative < 1e-12);
    }

    #[test]
    fn p2_m2() {
        let fam = &test_families()[4];
        let r = commutator_residual(&FieldOp::new(OpKind::P2, 0.35, 2), fam, 1.1).unwrap();
        assert!(r.relative < 1e-12, "{:?}", r);
    }

    #[test]
    fn wrong_rhs_detected() {
        // swap the sign convention of the P₂ expansion: residual must be O(1)
        let fam = &test_families()[0];
        let op = FieldOp::new(OpKind::P2, 0.5, 2);
        let t = 1.1;
        let f = fam.at(t);
        let rhs = commutator_rhs(&op, &f, t).unwrap();
        let r = commutator_residual(&op, fam, t).unwrap();
        assert!(rhs.l2() > 1e3 * r.residual);
    }

    #[test]
    fn powers_compose_on_grid() {
        use crate::fields::{sample_analytic, ModeSet, VelocityGrid};
        let f = AnalyticState::term(&[1], Poly::one(1), &[0.0], 1.0);
        let kv = sample_analytic(&f, &ModeSet::new(1, 2), &VelocityGrid::new(1, 64, 10.0).unwrap()).unwrap();
        let op = FieldOp::new(OpKind::P1, 0.5, 2);
        let a = apply_op_kv(&op.with_power(3), &apply_op_kv(&op, &kv, 0.7).unwrap(), 0.7).unwrap();
        let b = apply_op_kv(&op.with_power(5), &kv, 0.7).unwrap();
        let err: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        let sc: f64 = b.values.iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12 * sc);
        // grid ∂ agrees with the closed form
        let exact = sample_analytic(&apply_op_analytic(&op, &f, 0.7).unwrap(), &kv.modes, &kv.grid).unwrap();
        let g = apply_op_kv(&op, &kv, 0.7).unwrap();
        let e2: f64 = g.values.iter().zip(&exact.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(e2 < 1e-10);
    }
}
