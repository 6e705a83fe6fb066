//! Closed-form test functions: finite sums of e^{ik·x} p(v) e^{−|v−v₀|²/(2w²)}.

use crate::quad::binomial;
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Complex polynomial in `dim` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub dim: usize,
    pub terms: BTreeMap<Vec<u32>, C64>,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: C64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, C64::new(1.0, 0.0))
    }

    /// The coordinate v_i.
    pub fn var(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        let mut p = Self::zero(dim);
        p.add_term(e, C64::new(1.0, 0.0));
        p
    }

    pub fn monomial(exps: &[u32], c: f64) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(exps.to_vec(), C64::new(c, 0.0));
        p
    }

    /// |v|².
    pub fn norm_sq(dim: usize) -> Self {
        let mut p = Self::zero(dim);
        for i in 0..dim {
            let mut e = vec![0; dim];
            e[i] = 2;
            p.add_term(e, C64::new(1.0, 0.0));
        }
        p
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: C64) {
        debug_assert_eq!(exps.len(), self.dim);
        let e = self.terms.entry(exps).or_insert(C64::new(0.0, 0.0));
        *e += c;
    }

    fn prune(mut self) -> Self {
        self.terms.retain(|_, c| c.norm() != 0.0);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.norm() == 0.0)
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut p = self.clone();
        for (e, c) in &other.terms {
            p.add_term(e.clone(), *c);
        }
        p.prune()
    }

    pub fn scale(&self, c: C64) -> Poly {
        let mut p = self.clone();
        for v in p.terms.values_mut() {
            *v *= c;
        }
        p.prune()
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut p = Poly::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                p.add_term(e, ca * cb);
            }
        }
        p.prune()
    }

    pub fn deriv(&self, i: usize) -> Poly {
        let mut p = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                f[i] -= 1;
                p.add_term(f, c * e[i] as f64);
            }
        }
        p.prune()
    }

    pub fn conj(&self) -> Poly {
        let mut p = self.clone();
        for v in p.terms.values_mut() {
            *v = v.conj();
        }
        p
    }

    pub fn eval(&self, v: &[f64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut m = 1.0;
            for (x, &p) in v.iter().zip(e) {
                m *= x.powi(p as i32);
            }
            acc += c * m;
        }
        acc
    }
}

/// ∫_ℝ v^j e^{−(v−c)²/(2w²)} dv.
pub fn gauss_moment_1d(j: u32, c: f64, w: f64) -> f64 {
    let mut acc = 0.0;
    let mut dfact = 1.0; // (i−1)!! for even i
    for i in (0..=j).step_by(2) {
        if i > 0 {
            dfact *= (i - 1) as f64;
        }
        acc += binomial(j, i) * c.powi((j - i) as i32) * w.powi(i as i32) * dfact;
    }
    acc * (2.0 * PI).sqrt() * w
}

/// ∫ p(v) e^{−|v−c|²/(2w²)} dv, exact.
pub fn gauss_poly_integral(p: &Poly, center: &[f64], w: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (e, c) in &p.terms {
        let mut m = 1.0;
        for (axis, &j) in e.iter().enumerate() {
            m *= gauss_moment_1d(j, center[axis], w);
        }
        acc += c * m;
    }
    acc
}

/// Probabilists' Hermite polynomial He_j(x).
pub fn hermite_he(j: u32, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, x);
    if j == 0 {
        return h0;
    }
    for n in 1..j {
        let h2 = x * h1 - n as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// ∫ e^{−iηv} v^a e^{−(v−c)²/(2w²)} dv.
pub fn gauss_monomial_ft_1d(a: u32, c: f64, w: f64, eta: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    let miw = C64::new(0.0, -w);
    for j in 0..=a {
        acc += binomial(a, j) * c.powi((a - j) as i32) * miw.powu(j) * hermite_he(j, w * eta);
    }
    let base = (2.0 * PI).sqrt() * w * (-0.5 * w * w * eta * eta).exp();
    acc * base * C64::from_polar(1.0, -eta * c)
}

/// One summand c·e^{ik·x}·p(v)·e^{−|v−v₀|²/(2w²)} (c folded into p).
#[derive(Clone, Debug, PartialEq)]
pub struct GaussTerm {
    pub k: Vec<i64>,
    pub poly: Poly,
    pub center: Vec<f64>,
    pub width: f64,
}

impl GaussTerm {
    pub fn gaussian(&self, v: &[f64]) -> f64 {
        let r2: f64 = v
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (-0.5 * r2 / (self.width * self.width)).exp()
    }

    pub fn eval_v(&self, v: &[f64]) -> C64 {
        self.poly.eval(v) * self.gaussian(v)
    }

    /// ∂_{v_i} as a new term with the same Gaussian.
    pub fn dv(&self, i: usize) -> GaussTerm {
        let d = self.center.len();
        let mut lin = Poly::var(d, i);
        lin = lin.add(&Poly::constant(d, C64::new(-self.center[i], 0.0)));
        let p = self
            .poly
            .deriv(i)
            .add(&self.poly.mul(&lin).scale(C64::new(-1.0 / (self.width * self.width), 0.0)));
        GaussTerm { poly: p, ..self.clone() }
    }

    /// Velocity Fourier transform ∫ e^{−iη·v}(…) dv at η.
    pub fn ft_v(&self, eta: &[f64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (e, c) in &self.poly.terms {
            let mut m = C64::new(1.0, 0.0);
            for (axis, &j) in e.iter().enumerate() {
                m *= gauss_monomial_ft_1d(j, self.center[axis], self.width, eta[axis]);
            }
            acc += c * m;
        }
        acc
    }
}

/// Finite sum of Gaussian terms on 𝕋^{d_x} × ℝ^{d_v}.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticState {
    pub d_x: usize,
    pub d_v: usize,
    pub terms: Vec<GaussTerm>,
}

impl AnalyticState {
    pub fn zero(d_x: usize, d_v: usize) -> Self {
        Self { d_x, d_v, terms: vec![] }
    }

    /// c·e^{ik·x}·p(v)·e^{−|v−v₀|²/(2w²)}.
    pub fn term(k: &[i64], poly: Poly, center: &[f64], width: f64) -> Self {
        Self {
            d_x: k.len(),
            d_v: center.len(),
            terms: vec![GaussTerm { k: k.to_vec(), poly, center: center.to_vec(), width }],
        }
    }

    /// Normalized Maxwellian μ in d_v dimensions (no x dependence).
    pub fn maxwellian(d_x: usize, d_v: usize) -> Self {
        let c = (2.0 * PI).powf(-(d_v as f64) / 2.0);
        Self::term(&vec![0; d_x], Poly::constant(d_v, C64::new(c, 0.0)), &vec![0.0; d_v], 1.0)
    }

    /// μ^{1/2} = (2π)^{−d_v/4} e^{−|v|²/4}.
    pub fn sqrt_maxwellian(d_x: usize, d_v: usize) -> Self {
        Self::poly_times_sqrt_mu(d_x, Poly::one(d_v))
    }

    /// p(v)·μ^{1/2}.
    pub fn poly_times_sqrt_mu(d_x: usize, p: Poly) -> Self {
        let d_v = p.dim;
        let c = (2.0 * PI).powf(-(d_v as f64) / 4.0);
        Self::term(&vec![0; d_x], p.scale(C64::new(c, 0.0)), &vec![0.0; d_v], 2f64.sqrt())
    }

    /// p(v)·μ.
    pub fn poly_times_mu(d_x: usize, p: Poly) -> Self {
        let d_v = p.dim;
        let c = (2.0 * PI).powf(-(d_v as f64) / 2.0);
        Self::term(&vec![0; d_x], p.scale(C64::new(c, 0.0)), &vec![0.0; d_v], 1.0)
    }

    pub fn add(&self, other: &AnalyticState) -> AnalyticState {
        let mut s = self.clone();
        s.terms.extend(other.terms.iter().cloned());
        s
    }

    pub fn scale(&self, c: C64) -> AnalyticState {
        let mut s = self.clone();
        for t in &mut s.terms {
            t.poly = t.poly.scale(c);
        }
        s
    }

    /// Merge terms sharing (k, center, width) and drop zero terms.
    pub fn simplify(&self) -> AnalyticState {
        let mut out: Vec<GaussTerm> = Vec::new();
        for t in &self.terms {
            if let Some(o) = out
                .iter_mut()
                .find(|o| o.k == t.k && o.center == t.center && o.width == t.width)
            {
                o.poly = o.poly.add(&t.poly);
            } else {
                out.push(t.clone());
            }
        }
        out.retain(|t| !t.poly.is_zero());
        AnalyticState { d_x: self.d_x, d_v: self.d_v, terms: out }
    }

    pub fn dx(&self, j: usize) -> AnalyticState {
        let mut s = self.clone();
        for t in &mut s.terms {
            t.poly = t.poly.scale(C64::new(0.0, t.k[j] as f64));
        }
        s.simplify()
    }

    pub fn dv(&self, i: usize) -> AnalyticState {
        let terms = self.terms.iter().map(|t| t.dv(i)).collect();
        AnalyticState { terms, ..self.clone() }.simplify()
    }

    pub fn mul_poly(&self, q: &Poly) -> AnalyticState {
        let mut s = self.clone();
        for t in &mut s.terms {
            t.poly = t.poly.mul(q);
        }
        s.simplify()
    }

    /// v·∂_x (requires d_x = d_v).
    pub fn transport(&self) -> AnalyticState {
        assert_eq!(self.d_x, self.d_v, "transport needs d_x = d_v");
        let mut acc = AnalyticState::zero(self.d_x, self.d_v);
        for j in 0..self.d_x {
            acc = acc.add(&self.dx(j).mul_poly(&Poly::var(self.d_v, j)));
        }
        acc.simplify()
    }

    pub fn max_abs_k(&self) -> i64 {
        self.terms
            .iter()
            .flat_map(|t| t.k.iter().map(|k| k.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Pointwise value at (x, v).
    pub fn eval(&self, x: &[f64], v: &[f64]) -> C64 {
        self.terms
            .iter()
            .map(|t| {
                let ph: f64 = t.k.iter().zip(x).map(|(k, x)| *k as f64 * x).sum();
                C64::from_polar(1.0, ph) * t.eval_v(v)
            })
            .sum()
    }

    /// x-Fourier coefficient at wavenumber k, evaluated at v.
    pub fn eval_mode(&self, k: &[i64], v: &[f64]) -> C64 {
        self.terms
            .iter()
            .filter(|t| t.k == k)
            .map(|t| t.eval_v(v))
            .sum()
    }

    /// Full transform 𝓕_{x,v} at (k, η), coefficient normalization in x.
    pub fn spectrum(&self, k: &[i64], eta: &[f64]) -> C64 {
        self.terms
            .iter()
            .filter(|t| t.k == k)
            .map(|t| t.ft_v(eta))
            .sum()
    }

    /// Distinct wavenumbers present.
    pub fn modes(&self) -> Vec<Vec<i64>> {
        let mut ks: Vec<Vec<i64>> = self.terms.iter().map(|t| t.k.clone()).collect();
        ks.sort();
        ks.dedup();
        ks
    }

    /// Restriction to one wavenumber, as a k = 0 state.
    pub fn mode(&self, k: &[i64]) -> AnalyticState {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.k == k)
            .map(|t| GaussTerm { k: vec![0; self.d_x], ..t.clone() })
            .collect();
        AnalyticState { terms, ..self.clone() }
    }

    /// Exact ∫ conj(f_k) g_k dv for the k-mode of self (f) and other (g).
    pub fn inner_v(&self, other: &AnalyticState, k: &[i64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for a in self.terms.iter().filter(|t| t.k == k) {
            for b in other.terms.iter().filter(|t| t.k == k) {
                let (wa2, wb2) = (a.width * a.width, b.width * b.width);
                let prec = 1.0 / wa2 + 1.0 / wb2;
                let w = prec.recip().sqrt();
                let center: Vec<f64> = a
                    .center
                    .iter()
                    .zip(&b.center)
                    .map(|(ca, cb)| (ca / wa2 + cb / wb2) / prec)
                    .collect();
                let d2: f64 = a
                    .center
                    .iter()
                    .zip(&b.center)
                    .map(|(ca, cb)| (ca - cb) * (ca - cb))
                    .sum();
                let kfac = (-0.5 * d2 / (wa2 + wb2)).exp();
                acc += gauss_poly_integral(&a.poly.conj().mul(&b.poly), &center, w) * kfac;
            }
        }
        acc
    }

    /// Exact ∫ p(v)·f_k(v) dv.
    pub fn moment(&self, p: &Poly, k: &[i64]) -> C64 {
        self.terms
            .iter()
            .filter(|t| t.k == k)
            .map(|t| gauss_poly_integral(&t.poly.mul(p), &t.center, t.width))
            .sum()
    }

    /// ‖f_k‖_{L²_v}.
    pub fn l2_v(&self, k: &[i64]) -> f64 {
        self.inner_v(self, k).re.max(0.0).sqrt()
    }

    /// (Σ_k ‖f_k‖²_{L²_v})^{1/2}, the L²_{x,v} norm with coefficient normalization.
    pub fn l2(&self) -> f64 {
        self.modes().iter().map(|k| self.inner_v(self, k).re).sum::<f64>().max(0.0).sqrt()
    }

    /// Largest |f| over the sphere |v| = r sampled on axes and diagonals (boundary check).
    pub fn tail_bound(&self, r: f64) -> f64 {
        let d = self.d_v;
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for i in 0..d {
            for sgn in [-1.0, 1.0] {
                let mut e = vec![0.0; d];
                e[i] = sgn * r;
                dirs.push(e);
            }
        }
        dirs.push(vec![r / (d as f64).sqrt(); d]);
        let mut m: f64 = 0.0;
        for dir in &dirs {
            for t in &self.terms {
                m = m.max(t.eval_v(dir).norm());
            }
        }
        m
    }
}
