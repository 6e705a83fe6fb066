//! Non-cutoff collision operator by singular quadrature on analytic test functions (d_v = 3).
//!
//! The angular factor is fixed as sinθ·b(cosθ) = θ^{−1−2s} on (0, π/2]. The sphere is split
//! into a base panel [π/8, π/2] and dyadic panels towards θ_min; partial sums at the
//! cutoffs π/8·2^{−j} are extrapolated to θ_min → 0 by Richardson with exponents 2−2s+2i.

use crate::analytic::{AnalyticState, GaussTerm, Poly};
use crate::error::{LabError, Result};
use crate::macro_micro::micro_part;
use crate::quad::{gauss_hermite_scaled, gauss_legendre};
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

const THETA_BASE: f64 = PI / 8.0;
/// Relative weight of |gain| + |loss| in the extrapolation scale (roundoff floor).
const ROUNDOFF: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    pub gamma: f64,
    pub s: f64,
    /// Smallest cutoff; must be π/8·2^{−J} with J ≥ 1.
    pub theta_min: f64,
    /// Number of Richardson steps (≤ J).
    pub extrap_order: usize,
    /// Relative spread tolerance for the extrapolated value.
    pub extrap_tol: f64,
}

impl KernelSpec {
    pub fn new(gamma: f64, s: f64) -> Self {
        Self { gamma, s, theta_min: PI / 128.0, extrap_order: 4, extrap_tol: 1e-3 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(LabError::InvalidParam(m.to_string()));
        if !(self.s > 0.0 && self.s < 1.0) {
            return bad("s must lie in (0,1)");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0,1]");
        }
        let j = (THETA_BASE / self.theta_min).log2();
        if !(j >= 0.5) || (j - j.round()).abs() > 1e-9 {
            return bad("theta_min must be pi/8 * 2^-J with J >= 1");
        }
        if self.extrap_order > self.n_levels() - 1 {
            return bad("extrap_order exceeds the number of cutoff levels");
        }
        Ok(())
    }

    /// Number of cutoffs π/8·2^{−j}, j = 0..J.
    pub fn n_levels(&self) -> usize {
        (THETA_BASE / self.theta_min).log2().round() as usize + 1
    }

    pub fn cutoffs(&self) -> Vec<f64> {
        (0..self.n_levels()).map(|j| THETA_BASE * 0.5f64.powi(j as i32)).collect()
    }

    /// sinθ·b(cosθ).
    pub fn angular_density(&self, theta: f64) -> f64 {
        theta.powf(-1.0 - 2.0 * self.s)
    }

    /// b(cosθ) for θ ∈ (0, π/2].
    pub fn b(&self, cos_theta: f64) -> f64 {
        let th = cos_theta.clamp(-1.0, 1.0).acos();
        self.angular_density(th) / th.sin()
    }

    pub fn manifest(&self) -> Vec<(String, String)> {
        vec![
            ("kernel.gamma".into(), self.gamma.to_string()),
            ("kernel.s".into(), self.s.to_string()),
            ("kernel.angular".into(), "sin(theta) b(cos theta) = theta^(-1-2s)".into()),
            ("kernel.theta_min".into(), self.theta_min.to_string()),
            ("kernel.extrap_order".into(), self.extrap_order.to_string()),
            ("kernel.extrap_tol".into(), self.extrap_tol.to_string()),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss–Hermite order per axis in v*.
    pub gh_order: usize,
    /// Gauss–Legendre nodes on the base θ panel (a quarter of that on each dyadic panel).
    pub n_theta: usize,
    /// Azimuthal nodes at θ = π/2 (even; scaled by sinθ at each θ node, at least 4).
    pub n_phi: usize,
    /// Gauss–Hermite order per axis for outer v integrals.
    pub n_outer: usize,
    /// Tensor nodes with product weight below prune·max are dropped.
    pub prune: f64,
}

impl QuadratureSpec {
    pub fn new(gh_order: usize, n_theta: usize, n_phi: usize, n_outer: usize) -> Self {
        Self { gh_order, n_theta, n_phi, n_outer, prune: 1e-12 }
    }
    pub fn coarse() -> Self {
        Self::new(8, 8, 8, 8)
    }
    pub fn medium() -> Self {
        Self::new(12, 16, 12, 10)
    }
    pub fn fine() -> Self {
        Self::new(16, 32, 12, 12)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(LabError::InvalidParam(m.to_string()));
        if self.gh_order < 8 || self.n_theta < 8 {
            return bad("quadrature orders must be >= 8");
        }
        if self.n_phi < 4 || self.n_phi % 2 != 0 {
            return bad("n_phi must be even and >= 4");
        }
        if self.n_outer < 4 {
            return bad("n_outer must be >= 4");
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!("gh{}-th{}-ph{}-out{}", self.gh_order, self.n_theta, self.n_phi, self.n_outer)
    }

    pub fn manifest(&self) -> Vec<(String, String)> {
        vec![
            ("quad.gh_order".into(), self.gh_order.to_string()),
            ("quad.n_theta".into(), self.n_theta.to_string()),
            ("quad.n_phi".into(), self.n_phi.to_string()),
            ("quad.n_outer".into(), self.n_outer.to_string()),
            ("quad.prune".into(), self.prune.to_string()),
        ]
    }
}

type V3 = [f64; 3];

fn norm3(a: &V3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// σ-representation of the post-collision pair.
pub fn post_collision(v: &V3, v_star: &V3, sigma: &V3) -> Result<(V3, V3)> {
    let ns = norm3(sigma);
    if (ns - 1.0).abs() > 1e-12 {
        return Err(LabError::NonUnitSigma(ns));
    }
    let r = norm3(&[v[0] - v_star[0], v[1] - v_star[1], v[2] - v_star[2]]);
    let mut vp = [0.0; 3];
    let mut vsp = [0.0; 3];
    for i in 0..3 {
        let m = 0.5 * (v[i] + v_star[i]);
        vp[i] = m + 0.5 * r * sigma[i];
        vsp[i] = m - 0.5 * r * sigma[i];
    }
    Ok((vp, vsp))
}

/// Orthonormal pair completing u to a frame.
fn frame(u: &V3) -> (V3, V3) {
    let a = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = a[0] * u[0] + a[1] * u[1] + a[2] * u[2];
    let mut e1 = [a[0] - d * u[0], a[1] - d * u[1], a[2] - d * u[2]];
    let n = norm3(&e1);
    for x in &mut e1 {
        *x /= n;
    }
    let e2 = [
        u[1] * e1[2] - u[2] * e1[1],
        u[2] * e1[0] - u[0] * e1[2],
        u[0] * e1[1] - u[1] * e1[0],
    ];
    (e1, e2)
}

/// Quadrature node with its integration weight folded in.
#[derive(Clone, Copy, Debug)]
pub struct VNode {
    pub v: V3,
    pub w: f64,
}

/// Tensor Gauss–Hermite nodes for plain ∫ f dv (the weight e^{−|v|²/(2σ²)} is folded in).
pub fn tensor_nodes(n: usize, sigma: f64, prune: f64) -> Vec<VNode> {
    let r = gauss_hermite_scaled(n, 0.0, sigma);
    let wmax = r.weights.iter().cloned().fold(0.0, f64::max).powi(3);
    let mut out = Vec::new();
    for (a, wa) in r.nodes.iter().zip(&r.weights) {
        for (b, wb) in r.nodes.iter().zip(&r.weights) {
            for (c, wc) in r.nodes.iter().zip(&r.weights) {
                let w = wa * wb * wc;
                if w < prune * wmax {
                    continue;
                }
                let v = [*a, *b, *c];
                let r2 = a * a + b * b + c * c;
                out.push(VNode { v, w: w * (0.5 * r2 / (sigma * sigma)).exp() });
            }
        }
    }
    out
}

/// Real k = 0 analytic states compiled to (Gaussian group, monomial, coefficient) triples.
#[derive(Clone, Debug, Default)]
pub struct ProfileSet {
    groups: Vec<(V3, f64)>,
    monos: Vec<[u32; 3]>,
    max_pow: usize,
    funcs: Vec<Vec<(usize, usize, f64)>>,
}

pub struct ProfileWork {
    pw: [Vec<f64>; 3],
    ge: Vec<f64>,
    mv: Vec<f64>,
    ea: Vec<f64>,
}

impl ProfileSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    pub fn push(&mut self, f: &AnalyticState) -> Result<usize> {
        if f.d_v != 3 {
            return Err(LabError::DimensionMismatch("collision states need d_v = 3".into()));
        }
        let mut terms = Vec::new();
        for t in &f.terms {
            if t.k.iter().any(|&k| k != 0) {
                return Err(LabError::InvalidParam("collision states must be x-independent".into()));
            }
            let c = [t.center[0], t.center[1], t.center[2]];
            let a = 0.5 / (t.width * t.width);
            let g = match self.groups.iter().position(|(gc, ga)| *gc == c && *ga == a) {
                Some(i) => i,
                None => {
                    self.groups.push((c, a));
                    self.groups.len() - 1
                }
            };
            for (e, z) in &t.poly.terms {
                if z.im.abs() > 1e-14 * z.re.abs().max(1e-300) && z.im != 0.0 {
                    return Err(LabError::InvalidParam("collision states must be real".into()));
                }
                let e3 = [e[0], e[1], e[2]];
                self.max_pow = self.max_pow.max(e3.iter().cloned().max().unwrap_or(0) as usize);
                let m = match self.monos.iter().position(|x| *x == e3) {
                    Some(i) => i,
                    None => {
                        self.monos.push(e3);
                        self.monos.len() - 1
                    }
                };
                terms.push((g, m, z.re));
            }
        }
        self.funcs.push(terms);
        Ok(self.funcs.len() - 1)
    }

    pub fn work(&self) -> ProfileWork {
        let p = self.max_pow + 1;
        ProfileWork {
            pw: [vec![1.0; p], vec![1.0; p], vec![1.0; p]],
            ge: vec![0.0; self.groups.len()],
            mv: vec![0.0; self.monos.len()],
            ea: Vec::new(),
        }
    }

    pub fn eval(&self, v: &V3, w: &mut ProfileWork, out: &mut [f64]) {
        for (g, (c, a)) in self.groups.iter().enumerate() {
            let d = [v[0] - c[0], v[1] - c[1], v[2] - c[2]];
            w.ge[g] = (-a * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2])).exp();
        }
        self.finish_eval(v, w, out);
    }

    /// e^{−aE} per group for the partner evaluation, E = |v|² + |v*|².
    pub fn prepare_energy(&self, energy: f64, w: &mut ProfileWork) {
        w.ea.clear();
        w.ea.extend(self.groups.iter().map(|(_, a)| (-a * energy).exp()));
    }

    /// Evaluation of the functions `which` at the collision partner of a point whose Gaussians
    /// are in `partner`: for centered groups e^{−a|v*′|²} = e^{−aE}/e^{−a|v′|²}.
    pub fn eval_partner(&self, v: &V3, partner: &ProfileWork, w: &mut ProfileWork, which: &[usize], out: &mut [f64]) {
        for (g, (c, a)) in self.groups.iter().enumerate() {
            let p = partner.ge[g];
            w.ge[g] = if *c == [0.0; 3] && p > 1e-250 {
                w.ea[g] / p
            } else {
                let d = [v[0] - c[0], v[1] - c[1], v[2] - c[2]];
                (-a * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2])).exp()
            };
        }
        self.finish_subset(v, w, which, out);
    }

    /// Evaluation of the functions `which` only.
    pub fn eval_subset(&self, v: &V3, w: &mut ProfileWork, which: &[usize], out: &mut [f64]) {
        for (g, (c, a)) in self.groups.iter().enumerate() {
            let d = [v[0] - c[0], v[1] - c[1], v[2] - c[2]];
            w.ge[g] = (-a * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2])).exp();
        }
        self.finish_subset(v, w, which, out);
    }

    fn finish_subset(&self, v: &V3, w: &mut ProfileWork, which: &[usize], out: &mut [f64]) {
        self.powers(v, w);
        for &i in which {
            out[i] = self.funcs[i].iter().map(|&(g, m, c)| c * w.ge[g] * w.mv[m]).sum();
        }
    }

    fn powers(&self, v: &V3, w: &mut ProfileWork) {
        for a in 0..3 {
            for j in 1..=self.max_pow {
                w.pw[a][j] = w.pw[a][j - 1] * v[a];
            }
        }
        for (m, e) in self.monos.iter().enumerate() {
            w.mv[m] = w.pw[0][e[0] as usize] * w.pw[1][e[1] as usize] * w.pw[2][e[2] as usize];
        }
    }

    fn finish_eval(&self, v: &V3, w: &mut ProfileWork, out: &mut [f64]) {
        self.powers(v, w);
        for (o, f) in out.iter_mut().zip(&self.funcs) {
            *o = f.iter().map(|&(g, m, c)| c * w.ge[g] * w.mv[m]).sum();
        }
    }
}

/// Compile a list of states, sharing duplicates; returns the set and the index of each input.
fn compile(states: &[&AnalyticState]) -> Result<(ProfileSet, Vec<usize>)> {
    let mut set = ProfileSet::new();
    let mut seen: Vec<&AnalyticState> = Vec::new();
    let mut idx = Vec::new();
    for s in states {
        match seen.iter().position(|x| *x == *s) {
            Some(i) => idx.push(i),
            None => {
                idx.push(set.push(s)?);
                seen.push(s);
            }
        }
    }
    Ok((set, idx))
}

/// Product of two x-independent states.
pub fn multiply(a: &AnalyticState, b: &AnalyticState) -> AnalyticState {
    let mut terms = Vec::new();
    for ta in &a.terms {
        for tb in &b.terms {
            let (wa2, wb2) = (ta.width * ta.width, tb.width * tb.width);
            let prec = 1.0 / wa2 + 1.0 / wb2;
            let center: Vec<f64> = ta
                .center
                .iter()
                .zip(&tb.center)
                .map(|(ca, cb)| (ca / wa2 + cb / wb2) / prec)
                .collect();
            let d2: f64 = ta.center.iter().zip(&tb.center).map(|(x, y)| (x - y) * (x - y)).sum();
            let k: Vec<i64> = ta.k.iter().zip(&tb.k).map(|(x, y)| x + y).collect();
            let poly = ta.poly.mul(&tb.poly).scale(C64::new((-0.5 * d2 / (wa2 + wb2)).exp(), 0.0));
            terms.push(GaussTerm { k, poly, center, width: prec.recip().sqrt() });
        }
    }
    AnalyticState { d_x: a.d_x, d_v: a.d_v, terms }.simplify()
}

pub fn sqrt_mu() -> AnalyticState {
    AnalyticState::sqrt_maxwellian(1, 3)
}

pub fn mu() -> AnalyticState {
    AnalyticState::maxwellian(1, 3)
}

/// p(v)·√μ on the 1 × 3 phase space.
pub fn poly_sqrt_mu(p: Poly) -> AnalyticState {
    AnalyticState::poly_times_sqrt_mu(1, p)
}

#[derive(Clone, Copy, Debug)]
struct SigmaNode {
    ct: f64,
    st: f64,
    cp: f64,
    sp: f64,
    w: f64,
}

/// Partial sums at the cutoff levels extrapolated to θ_min → 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Extrapolated {
    pub value: f64,
    /// |difference of the last two diagonal Richardson estimates|.
    pub spread: f64,
    /// Partial sum at the smallest cutoff (no extrapolation).
    pub raw: f64,
    pub levels: Vec<f64>,
}

/// Richardson extrapolation of partial sums S_j at θ_j = π/8·2^{−j} with exponents 2−2s+2i.
pub fn richardson(levels: &[f64], s: f64, order: usize) -> Extrapolated {
    let n = levels.len();
    let order = order.min(n - 1);
    let mut table: Vec<Vec<f64>> = levels.iter().map(|&x| vec![x]).collect();
    for i in 1..=order {
        let f = 2f64.powf(2.0 - 2.0 * s + 2.0 * (i - 1) as f64);
        for j in i..n {
            let r = (f * table[j][i - 1] - table[j - 1][i - 1]) / (f - 1.0);
            table[j].push(r);
        }
    }
    let value = table[n - 1][order];
    let spread = if order == 0 {
        (levels[n - 1] - levels[n.saturating_sub(2)]).abs()
    } else {
        (value - table[n - 2][order - 1]).abs()
    };
    Extrapolated { value, spread, raw: levels[n - 1], levels: levels.to_vec() }
}

/// Panel sums → cumulative level sums → extrapolation, with the divergence check.
fn finish(kernel: &KernelSpec, panels: &[f64], scale: f64) -> Result<Extrapolated> {
    let mut levels = Vec::with_capacity(panels.len());
    let mut acc = 0.0;
    for p in panels {
        acc += p;
        levels.push(acc);
    }
    let e = richardson(&levels, kernel.s, kernel.extrap_order);
    let tol = kernel.extrap_tol * scale.max(f64::MIN_POSITIVE);
    if !(e.spread <= tol) {
        return Err(LabError::ExtrapolationDiverged { spread: e.spread, tol });
    }
    Ok(e)
}

/// Quadrature engine holding the sphere panels and the v* rule.
#[derive(Clone, Debug)]
pub struct CollisionEngine {
    pub kernel: KernelSpec,
    pub quad: QuadratureSpec,
    panels: Vec<Vec<SigmaNode>>,
    inner: Vec<VNode>,
}

impl CollisionEngine {
    pub fn new(kernel: KernelSpec, quad: QuadratureSpec) -> Result<Self> {
        kernel.validate()?;
        quad.validate()?;
        let mut bounds = vec![(THETA_BASE, FRAC_PI_2, quad.n_theta)];
        let mut hi = THETA_BASE;
        for _ in 1..kernel.n_levels() {
            bounds.push((hi / 2.0, hi, (quad.n_theta / 4).max(4)));
            hi /= 2.0;
        }
        let panels = bounds
            .iter()
            .map(|&(a, b, n)| {
                let gl = gauss_legendre(n, a, b);
                let mut nodes = Vec::new();
                for (th, w) in gl.nodes.iter().zip(&gl.weights) {
                    let mut nphi = (quad.n_phi as f64 * th.sin()).ceil() as usize;
                    nphi = (nphi + nphi % 2).max(4);
                    let dphi = 2.0 * PI / nphi as f64;
                    let wt = w * kernel.angular_density(*th) * dphi;
                    for j in 0..nphi {
                        let ph = (j as f64 + 0.5) * dphi;
                        nodes.push(SigmaNode { ct: th.cos(), st: th.sin(), cp: ph.cos(), sp: ph.sin(), w: wt });
                    }
                }
                nodes
            })
            .collect();
        let inner = tensor_nodes(quad.gh_order, 1.0, quad.prune);
        Ok(Self { kernel, quad, panels, inner })
    }

    pub fn n_panels(&self) -> usize {
        self.panels.len()
    }

    /// Outer nodes for ∫ dv with Gaussian scale σ.
    pub fn outer_nodes(&self, sigma: f64) -> Vec<VNode> {
        tensor_nodes(self.quad.n_outer, sigma, self.quad.prune)
    }

    /// Panel sums of Q(G_i, F_i)(v) at each point: out[point][panel·n_pairs + i].
    /// Also returns panel sums of |difference| plus a roundoff share of |gain| + |loss|.
    /// The v* rule is scaled to the widest Gaussian among the inputs.
    pub fn q_panels(
        &self,
        pairs: &[(&AnalyticState, &AnalyticState)],
        points: &[V3],
    ) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let np = pairs.len();
        let roles: Vec<&AnalyticState> = pairs.iter().map(|p| p.0).chain(pairs.iter().map(|p| p.1)).collect();
        let (set, idx) = compile(&roles)?;
        let (gi, fi) = idx.split_at(np);
        let mut g_roles: Vec<usize> = gi.to_vec();
        g_roles.sort_unstable();
        g_roles.dedup();
        let mut f_roles: Vec<usize> = fi.to_vec();
        f_roles.sort_unstable();
        f_roles.dedup();
        let npan = self.panels.len();
        let sigma = pairs
            .iter()
            .flat_map(|(g, f)| g.terms.iter().chain(&f.terms).map(|t| t.width))
            .fold(1.0, f64::max);
        let inner = if sigma > 1.0 {
            tensor_nodes(self.quad.gh_order, sigma, self.quad.prune)
        } else {
            self.inner.clone()
        };
        let (mut wp, mut ws) = (set.work(), set.work());
        let nf = set.len();
        let (mut at_v, mut at_s, mut at_p, mut at_sp) = (vec![0.0; nf], vec![0.0; nf], vec![0.0; nf], vec![0.0; nf]);
        let mut loss = vec![0.0; np];
        let mut loc = vec![0.0; np];
        let mut loc_abs = vec![0.0; np];
        let mut out = Vec::with_capacity(points.len());
        let mut out_abs = Vec::with_capacity(points.len());
        for v in points {
            set.eval(v, &mut wp, &mut at_v);
            let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            let mut acc = vec![0.0; npan * np];
            let mut acc_abs = vec![0.0; npan * np];
            for node in &inner {
                let vs = node.v;
                let rel = [v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]];
                let r = norm3(&rel);
                if r < 1e-12 {
                    continue;
                }
                set.eval_subset(&vs, &mut ws, &g_roles, &mut at_s);
                for p in 0..np {
                    loss[p] = at_s[gi[p]] * at_v[fi[p]];
                }
                set.prepare_energy(v2 + vs[0] * vs[0] + vs[1] * vs[1] + vs[2] * vs[2], &mut ws);
                let base = node.w * r.powf(self.kernel.gamma);
                let u = [rel[0] / r, rel[1] / r, rel[2] / r];
                let (e1, e2) = frame(&u);
                let mid = [0.5 * (v[0] + vs[0]), 0.5 * (v[1] + vs[1]), 0.5 * (v[2] + vs[2])];
                let h = 0.5 * r;
                for (pi, panel) in self.panels.iter().enumerate() {
                    loc.iter_mut().for_each(|x| *x = 0.0);
                    loc_abs.iter_mut().for_each(|x| *x = 0.0);
                    for sn in panel {
                        let mut sg = [0.0; 3];
                        for a in 0..3 {
                            sg[a] = sn.ct * u[a] + sn.st * (sn.cp * e1[a] + sn.sp * e2[a]);
                        }
                        let vp = [mid[0] + h * sg[0], mid[1] + h * sg[1], mid[2] + h * sg[2]];
                        let vsp = [mid[0] - h * sg[0], mid[1] - h * sg[1], mid[2] - h * sg[2]];
                        set.eval_subset(&vp, &mut wp, &f_roles, &mut at_p);
                        set.eval_partner(&vsp, &wp, &mut ws, &g_roles, &mut at_sp);
                        for p in 0..np {
                            let gain = at_sp[gi[p]] * at_p[fi[p]];
                            let d = gain - loss[p];
                            loc[p] += sn.w * d;
                            loc_abs[p] += sn.w * (d.abs() + ROUNDOFF * (gain.abs() + loss[p].abs()));
                        }
                    }
                    for p in 0..np {
                        acc[pi * np + p] += base * loc[p];
                        acc_abs[pi * np + p] += base * loc_abs[p];
                    }
                }
            }
            out.push(acc);
            out_abs.push(acc_abs);
        }
        Ok((out, out_abs))
    }

    /// Panel sums of the two (trinorm) integrands as Gram matrices over `funcs`:
    /// out[panel][(term·n + i)·n + j], term 0 = μ*(f−f′)², term 1 = f*²(√μ′−√μ)².
    pub fn triple_panels(&self, funcs: &[&AnalyticState]) -> Result<Vec<Vec<f64>>> {
        let (set, idx) = compile(funcs)?;
        let n = funcs.len();
        let mut w = set.work();
        let rm = sqrt_mu();
        let mut mset = ProfileSet::new();
        mset.push(&rm)?;
        let mut mw = mset.work();
        let mut f_v = vec![0.0; set.len()];
        let mut f_s = vec![0.0; set.len()];
        let mut f_p = vec![0.0; set.len()];
        let mut m1 = [0.0];
        let mut loc = vec![0.0; 2 * n * n];
        let mut out = vec![vec![0.0; 2 * n * n]; self.panels.len()];
        let c_mu = (2.0 * PI).powf(-1.5);
        let mut dv = vec![0.0; n];
        for on in self.outer_nodes(2f64.sqrt()) {
            let v = on.v;
            set.eval(&v, &mut w, &mut f_v);
            mset.eval(&v, &mut mw, &mut m1);
            let rmu_v = m1[0];
            for node in &self.inner {
                let vs = node.v;
                let rel = [v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]];
                let r = norm3(&rel);
                if r < 1e-12 {
                    continue;
                }
                set.eval(&vs, &mut w, &mut f_s);
                let mu_s = c_mu * (-0.5 * (vs[0] * vs[0] + vs[1] * vs[1] + vs[2] * vs[2])).exp();
                let base = on.w * node.w * r.powf(self.kernel.gamma);
                let u = [rel[0] / r, rel[1] / r, rel[2] / r];
                let (e1, e2) = frame(&u);
                let mid = [0.5 * (v[0] + vs[0]), 0.5 * (v[1] + vs[1]), 0.5 * (v[2] + vs[2])];
                let h = 0.5 * r;
                for (pi, panel) in self.panels.iter().enumerate() {
                    loc.iter_mut().for_each(|x| *x = 0.0);
                    for sn in panel {
                        let mut vp = [0.0; 3];
                        for a in 0..3 {
                            vp[a] = mid[a] + h * (sn.ct * u[a] + sn.st * (sn.cp * e1[a] + sn.sp * e2[a]));
                        }
                        set.eval(&vp, &mut w, &mut f_p);
                        mset.eval(&vp, &mut mw, &mut m1);
                        let dm = m1[0] - rmu_v;
                        let wa = sn.w * mu_s;
                        let wb = sn.w * dm * dm;
                        for i in 0..n {
                            dv[i] = f_v[idx[i]] - f_p[idx[i]];
                        }
                        for i in 0..n {
                            for j in i..n {
                                loc[i * n + j] += wa * dv[i] * dv[j];
                                loc[n * n + i * n + j] += wb * f_s[idx[i]] * f_s[idx[j]];
                            }
                        }
                    }
                    for (o, l) in out[pi].iter_mut().zip(&loc) {
                        *o += base * l;
                    }
                }
            }
        }
        for panel in &mut out {
            for t in 0..2 {
                for i in 0..n {
                    for j in 0..i {
                        panel[t * n * n + i * n + j] = panel[t * n * n + j * n + i];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Panel sums of ¼∫∫∫Bμμ*(g′+g*′−g−g*)_i(…)_j with g = h/√μ: the weak form of ⟨−ℒh_i,h_j⟩.
    pub fn weak_form_panels(&self, funcs: &[&AnalyticState]) -> Result<Vec<Vec<f64>>> {
        let (set, idx) = compile(funcs)?;
        let n = funcs.len();
        let mut w = set.work();
        let mut buf = vec![0.0; set.len()];
        let c4 = (2.0 * PI).powf(0.75);
        let mut g_at = |v: &V3, out: &mut Vec<f64>| {
            set.eval(v, &mut w, &mut buf);
            let e = c4 * (0.25 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp();
            for i in 0..n {
                out[i] = buf[idx[i]] * e;
            }
        };
        let (mut gv, mut gs, mut gp, mut gsp, mut dg) =
            (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let c_mu = (2.0 * PI).powf(-1.5);
        let mut out = vec![vec![0.0; n * n]; self.panels.len()];
        let mut loc = vec![0.0; n * n];
        for on in self.outer_nodes(1.0) {
            let v = on.v;
            g_at(&v, &mut gv);
            let mu_v = c_mu * (-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp();
            for node in &self.inner {
                let vs = node.v;
                let rel = [v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]];
                let r = norm3(&rel);
                if r < 1e-12 {
                    continue;
                }
                g_at(&vs, &mut gs);
                let mu_s = c_mu * (-0.5 * (vs[0] * vs[0] + vs[1] * vs[1] + vs[2] * vs[2])).exp();
                let base = 0.25 * on.w * node.w * mu_v * mu_s * r.powf(self.kernel.gamma);
                let u = [rel[0] / r, rel[1] / r, rel[2] / r];
                let (e1, e2) = frame(&u);
                let mid = [0.5 * (v[0] + vs[0]), 0.5 * (v[1] + vs[1]), 0.5 * (v[2] + vs[2])];
                let h = 0.5 * r;
                for (pi, panel) in self.panels.iter().enumerate() {
                    loc.iter_mut().for_each(|x| *x = 0.0);
                    for sn in panel {
                        let mut sg = [0.0; 3];
                        for a in 0..3 {
                            sg[a] = sn.ct * u[a] + sn.st * (sn.cp * e1[a] + sn.sp * e2[a]);
                        }
                        let vp = [mid[0] + h * sg[0], mid[1] + h * sg[1], mid[2] + h * sg[2]];
                        let vsp = [mid[0] - h * sg[0], mid[1] - h * sg[1], mid[2] - h * sg[2]];
                        g_at(&vp, &mut gp);
                        g_at(&vsp, &mut gsp);
                        for i in 0..n {
                            dg[i] = gp[i] + gsp[i] - gv[i] - gs[i];
                        }
                        for i in 0..n {
                            for j in i..n {
                                loc[i * n + j] += sn.w * dg[i] * dg[j];
                            }
                        }
                    }
                    for (o, l) in out[pi].iter_mut().zip(&loc) {
                        *o += base * l;
                    }
                }
            }
        }
        for panel in &mut out {
            for i in 0..n {
                for j in 0..i {
                    panel[i * n + j] = panel[j * n + i];
                }
            }
        }
        Ok(out)
    }
}

fn column(panels: &[Vec<f64>], q: usize) -> Vec<f64> {
    panels.iter().map(|p| p[q]).collect()
}

/// Q(G, F)(v) with extrapolation in θ_min.
pub fn q_bilinear(g: &AnalyticState, f: &AnalyticState, v: &V3, engine: &CollisionEngine) -> Result<f64> {
    Ok(q_bilinear_detail(g, f, v, engine)?.value)
}

/// Q(G, F)(v) with the cutoff-level sums and the unextrapolated value.
pub fn q_bilinear_detail(g: &AnalyticState, f: &AnalyticState, v: &V3, engine: &CollisionEngine) -> Result<Extrapolated> {
    let (vals, abs) = engine.q_panels(&[(g, f)], &[*v])?;
    let scale: f64 = abs[0].iter().sum();
    finish(&engine.kernel, &vals[0], scale)
}

/// (Γ(f, g)(v), ℒf(v)).
pub fn gamma_and_l(f: &AnalyticState, g: &AnalyticState, v: &V3, engine: &CollisionEngine) -> Result<(f64, f64)> {
    let m = mu();
    let rm = sqrt_mu();
    let (sf, sg) = (multiply(&rm, f), multiply(&rm, g));
    let pairs = [(&sf, &sg), (&m, &sf), (&sf, &m)];
    let (vals, abs) = engine.q_panels(&pairs, &[*v])?;
    let np = pairs.len();
    let npan = engine.n_panels();
    let get = |q: usize| -> Result<f64> {
        let p: Vec<f64> = (0..npan).map(|i| vals[0][i * np + q]).collect();
        let sc: f64 = (0..npan).map(|i| abs[0][i * np + q]).sum();
        Ok(finish(&engine.kernel, &p, sc)?.value)
    };
    let inv = 1.0 / eval_real(&rm, v);
    Ok((get(0)? * inv, (get(1)? + get(2)?) * inv))
}

pub fn eval_real(f: &AnalyticState, v: &V3) -> f64 {
    f.eval_mode(&vec![0; f.d_x], v).re
}

/// Gram matrix of the triple norm over `funcs` (extrapolated per entry).
pub fn triple_gram(funcs: &[&AnalyticState], engine: &CollisionEngine) -> Result<Vec<Vec<f64>>> {
    let n = funcs.len();
    let panels = engine.triple_panels(funcs)?;
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut tot = 0.0;
            for t in 0..2 {
                let q = t * n * n + i * n + j;
                let col = column(&panels, q);
                let diag = column(&panels, t * n * n + i * n + i).iter().sum::<f64>().abs()
                    + column(&panels, t * n * n + j * n + j).iter().sum::<f64>().abs();
                tot += finish(&engine.kernel, &col, diag)?.value;
            }
            g[i][j] = tot;
        }
    }
    Ok(g)
}

pub fn triple_norm(f: &AnalyticState, engine: &CollisionEngine) -> Result<f64> {
    Ok(triple_gram(&[f], engine)?[0][0].max(0.0).sqrt())
}

/// Matrix M_ij = −⟨ℒh_i, h_j⟩ by the strong form; the outer rule carries μ-type weight since
/// μ^{−1/2}Q(μ, √μh)·h decays like μ for √μ-type h.
pub fn dissipation_matrix(funcs: &[&AnalyticState], engine: &CollisionEngine) -> Result<Vec<Vec<f64>>> {
    let n = funcs.len();
    let m = mu();
    let rm = sqrt_mu();
    let sf: Vec<AnalyticState> = funcs.iter().map(|f| multiply(&rm, f)).collect();
    let mut pairs = Vec::with_capacity(2 * n);
    for f in &sf {
        pairs.push((&m, f));
        pairs.push((f, &m));
    }
    let outer = engine.outer_nodes(1.0);
    let points: Vec<V3> = outer.iter().map(|o| o.v).collect();
    let (vals, abs) = engine.q_panels(&pairs, &points)?;
    let (set, idx) = compile(funcs)?;
    let mut w = set.work();
    let mut hv = vec![0.0; set.len()];
    let npan = engine.n_panels();
    let np = pairs.len();
    let mut acc = vec![vec![vec![0.0; npan]; n]; n];
    let mut sc = vec![vec![0.0; n]; n];
    for (o, (row, arow)) in outer.iter().zip(vals.iter().zip(&abs)) {
        set.eval(&o.v, &mut w, &mut hv);
        let inv = 1.0 / eval_real(&rm, &o.v);
        for i in 0..n {
            for j in 0..n {
                let hj = hv[idx[j]];
                for p in 0..npan {
                    let q = row[p * np + 2 * i] + row[p * np + 2 * i + 1];
                    acc[i][j][p] -= o.w * inv * q * hj;
                    sc[i][j] += o.w * inv * (arow[p * np + 2 * i] + arow[p * np + 2 * i + 1]) * hj.abs();
                }
            }
        }
    }
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = finish(&engine.kernel, &acc[i][j], sc[i][j])?.value;
        }
    }
    Ok(out)
}

/// Weak-form oracle for the same matrix.
pub fn dissipation_matrix_weak(funcs: &[&AnalyticState], engine: &CollisionEngine) -> Result<Vec<Vec<f64>>> {
    let n = funcs.len();
    let panels = engine.weak_form_panels(funcs)?;
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let diag = column(&panels, i * n + i).iter().sum::<f64>() + column(&panels, j * n + j).iter().sum::<f64>();
            out[i][j] = finish(&engine.kernel, &column(&panels, i * n + j), diag)?.value;
        }
    }
    Ok(out)
}

/// ‖h‖²_{H^s} Gram matrix, (2π)^{−3}∫⟨η⟩^{2s} conj(ĥ_i)ĥ_j dη by tensor Gauss–Hermite.
pub fn hs_gram(funcs: &[&AnalyticState], s: f64, n: usize) -> Vec<Vec<f64>> {
    let wmin = funcs
        .iter()
        .flat_map(|f| f.terms.iter().map(|t| t.width))
        .fold(f64::INFINITY, f64::min);
    let nodes = tensor_nodes(n, 1.0 / (wmin * 2f64.sqrt()), 1e-18);
    let k0 = vec![0i64; funcs.first().map_or(1, |f| f.d_x)];
    let m = funcs.len();
    let mut g = vec![vec![0.0; m]; m];
    let mut spec = vec![C64::new(0.0, 0.0); m];
    for node in &nodes {
        let e2 = node.v.iter().map(|x| x * x).sum::<f64>();
        let wt = node.w * (1.0 + e2).powf(s) / (2.0 * PI).powi(3);
        for (sp, f) in spec.iter_mut().zip(funcs) {
            *sp = f.spectrum(&k0, &node.v);
        }
        for i in 0..m {
            for j in 0..m {
                g[i][j] += wt * (spec[i].conj() * spec[j]).re;
            }
        }
    }
    g
}

pub fn hs_norm(h: &AnalyticState, s: f64) -> f64 {
    hs_gram(&[h], s, 24)[0][0].max(0.0).sqrt()
}

fn quad_form(m: &[Vec<f64>], c: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..c.len() {
        for j in 0..c.len() {
            acc += c[i] * m[i][j] * c[j];
        }
    }
    acc
}

/// Standard coercivity probes: √μ (macroscopic), four microscopic polynomial
/// modes and a shifted Gaussian with a nonzero macroscopic part.
pub fn probe_family() -> Vec<(String, AnalyticState)> {
    let p = |e: &[u32]| poly_sqrt_mu(Poly::monomial(e, 1.0));
    let r2 = Poly::norm_sq(3);
    let c = |x: f64| C64::new(x, 0.0);
    let heat = r2.mul(&Poly::var(3, 0)).add(&Poly::var(3, 0).scale(c(-5.0)));
    let quartic = r2.mul(&r2).add(&r2.scale(c(-10.0))).add(&Poly::constant(3, c(15.0)));
    let shifted = AnalyticState::term(&[0], Poly::one(3).add(&Poly::var(3, 1).scale(c(0.5))), &[0.4, -0.2, 0.3], SQRT_2);
    vec![
        ("sqrt_mu".into(), sqrt_mu()),
        ("v1v2".into(), p(&[1, 1, 0])),
        ("v1^2-v2^2".into(), p(&[2, 0, 0]).add(&p(&[0, 2, 0]).scale(c(-1.0)))),
        ("(|v|^2-5)v1".into(), poly_sqrt_mu(heat)),
        ("|v|^4-10|v|^2+15".into(), poly_sqrt_mu(quartic)),
        ("shifted".into(), shifted),
    ]
}

#[derive(Clone, Debug)]
pub struct ProbeRow {
    pub name: String,
    pub dissipation: f64,
    pub triple_micro_sq: f64,
    pub hs: f64,
    /// ⟨−ℒh,h⟩ / |||(I−P)h|||².
    pub ratio_rela: f64,
    /// |||(I−P)h||| / ‖(I−P)h‖_{H^s}.
    pub ratio_low: f64,
}

#[derive(Clone, Debug)]
pub struct CoercivityReport {
    pub rows: Vec<ProbeRow>,
    pub excluded: Vec<String>,
    pub c1_rela: f64,
    pub c1_low: f64,
    pub min_dissipation: f64,
}

/// Ratio table on the microscopic parts of `family` plus `n_random` unit combinations of them.
pub fn coercivity_probe(
    family: &[(String, AnalyticState)],
    engine: &CollisionEngine,
    n_random: usize,
    seed: u64,
) -> Result<CoercivityReport> {
    let mut names = Vec::new();
    let mut micro = Vec::new();
    let mut excluded = Vec::new();
    for (name, h) in family {
        let u = micro_part(h);
        let n = u.l2_v(&vec![0; u.d_x]);
        if n < 1e-8 * h.l2_v(&vec![0; h.d_x]).max(1e-300) {
            excluded.push(name.clone());
            continue;
        }
        names.push(name.clone());
        micro.push(u.scale(C64::new(1.0 / n, 0.0)));
    }
    if micro.is_empty() {
        return Err(LabError::InsufficientData("no microscopic probes".into()));
    }
    let refs: Vec<&AnalyticState> = micro.iter().collect();
    let m = dissipation_matrix(&refs, engine)?;
    let t = triple_gram(&refs, engine)?;
    let g = hs_gram(&refs, engine.kernel.s, 24);
    let n = refs.len();
    let mut combos: Vec<(String, Vec<f64>)> = (0..n)
        .map(|i| {
            let mut c = vec![0.0; n];
            c[i] = 1.0;
            (names[i].clone(), c)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for r in 0..n_random {
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        combos.push((format!("random{r}"), c));
    }
    let k0 = vec![0i64; refs[0].d_x];
    let l2: Vec<Vec<f64>> = refs
        .iter()
        .map(|a| refs.iter().map(|b| a.inner_v(b, &k0).re).collect())
        .collect();
    let mut rows = Vec::with_capacity(combos.len());
    let mut min_dissipation = f64::INFINITY;
    for (name, c) in combos {
        let d = quad_form(&m, &c);
        let tn = quad_form(&t, &c);
        let hs = quad_form(&g, &c).max(0.0).sqrt();
        min_dissipation = min_dissipation.min(d / quad_form(&l2, &c));
        rows.push(ProbeRow {
            name,
            dissipation: d,
            triple_micro_sq: tn,
            hs,
            ratio_rela: d / tn,
            ratio_low: tn.max(0.0).sqrt() / hs,
        });
    }
    let c1_rela = rows.iter().map(|r| r.ratio_rela).fold(f64::INFINITY, f64::min);
    let c1_low = rows.iter().map(|r| r.ratio_low).fold(f64::INFINITY, f64::min);
    Ok(CoercivityReport { rows, excluded, c1_rela, c1_low, min_dissipation })
}

/// T[a][b][c] = ⟨Γ(u_a, u_b), u_c⟩, extrapolated per entry; outer rule σ = 1.
pub fn trilinear_tensor(basis: &[&AnalyticState], engine: &CollisionEngine) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = basis.len();
    let rm = sqrt_mu();
    let sb: Vec<AnalyticState> = basis.iter().map(|u| multiply(&rm, u)).collect();
    let mut pairs = Vec::with_capacity(n * n);
    for a in &sb {
        for b in &sb {
            pairs.push((a, b));
        }
    }
    let outer = engine.outer_nodes(1.0);
    let points: Vec<V3> = outer.iter().map(|o| o.v).collect();
    let (vals, abs) = engine.q_panels(&pairs, &points)?;
    let (set, idx) = compile(basis)?;
    let mut w = set.work();
    let mut uv = vec![0.0; set.len()];
    let npan = engine.n_panels();
    let np = pairs.len();
    let mut acc = vec![vec![0.0; npan]; np * n];
    let mut sc = vec![0.0; np * n];
    for (o, (row, arow)) in outer.iter().zip(vals.iter().zip(&abs)) {
        set.eval(&o.v, &mut w, &mut uv);
        let inv = o.w / eval_real(&rm, &o.v);
        for q in 0..np {
            for c in 0..n {
                let hc = uv[idx[c]];
                for p in 0..npan {
                    acc[q * n + c][p] += inv * row[p * np + q] * hc;
                    sc[q * n + c] += inv * arow[p * np + q] * hc.abs();
                }
            }
        }
    }
    let mut t = vec![vec![vec![0.0; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let q = (a * n + b) * n + c;
                t[a][b][c] = finish(&engine.kernel, &acc[q], sc[q])?.value;
            }
        }
    }
    Ok(t)
}

#[derive(Clone, Debug)]
pub struct TrilinearRow {
    pub name: String,
    pub value: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct TrilinearReport {
    pub rows: Vec<TrilinearRow>,
    /// Max ratio over the random triples only.
    pub max_random: f64,
    pub max_ratio: f64,
}

/// |⟨Γ(f,g),h⟩| / (‖f‖·|||g|||·|||h|||) for coefficient triples over `basis`.
/// A zero numerator gives ratio 0; otherwise a vanishing denominator is an error.
pub fn trilinear_ratios(
    basis: &[&AnalyticState],
    triples: &[(String, [Vec<f64>; 3])],
    engine: &CollisionEngine,
) -> Result<Vec<TrilinearRow>> {
    let n = basis.len();
    let t = trilinear_tensor(basis, engine)?;
    let tn = triple_gram(basis, engine)?;
    let k0 = vec![0i64; basis[0].d_x];
    let l2: Vec<Vec<f64>> = basis.iter().map(|a| basis.iter().map(|b| a.inner_v(b, &k0).re).collect()).collect();
    let mut rows = Vec::with_capacity(triples.len());
    for (name, [f, g, h]) in triples {
        let mut num = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    num += f[a] * g[b] * h[c] * t[a][b][c];
                }
            }
        }
        let den = quad_form(&l2, f).max(0.0).sqrt() * quad_form(&tn, g).max(0.0).sqrt() * quad_form(&tn, h).max(0.0).sqrt();
        let ratio = if num == 0.0 {
            0.0
        } else if den < 1e-14 {
            return Err(LabError::Degenerate(format!("trilinear triple {name}")));
        } else {
            num.abs() / den
        };
        rows.push(TrilinearRow { name: name.clone(), value: num, ratio });
    }
    Ok(rows)
}

/// Named triples plus `n_random` random coefficient triples over `basis`.
pub fn trilinear_probe(
    basis: &[&AnalyticState],
    named: &[(String, [Vec<f64>; 3])],
    n_random: usize,
    seed: u64,
    engine: &CollisionEngine,
) -> Result<TrilinearReport> {
    let n = basis.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = named.to_vec();
    for r in 0..n_random {
        let mut draw = || (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        triples.push((format!("random{r}"), [draw(), draw(), draw()]));
    }
    let rows = trilinear_ratios(basis, &triples, engine)?;
    let max_random = rows[named.len()..].iter().map(|r| r.ratio).fold(0.0, f64::max);
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(TrilinearReport { rows, max_random, max_ratio })
}

/// Conservation and null-space defects at one quadrature level.
#[derive(Clone, Debug)]
pub struct InvariantReport {
    /// |∫Q(F,F)φ dv| for φ = 1, v₁, v₂, v₃, |v|².
    pub q_moments: [f64; 5],
    /// ∫|Q(F,F)|(1+|v|²) dv.
    pub q_scale: f64,
    /// ‖ℒ(φ√μ)‖_{L²} for the same φ.
    pub l_norms: [f64; 5],
    /// ‖ℒh‖·‖φ√μ‖/‖h‖ with h = v₁v₂√μ, per φ.
    pub l_scales: [f64; 5],
    pub q_mu_mu: f64,
}

impl InvariantReport {
    pub fn worst_relative(&self) -> f64 {
        let q = self.q_moments.iter().map(|x| x / self.q_scale);
        let l = self.l_norms.iter().zip(&self.l_scales).map(|(x, s)| x / s);
        q.chain(l).fold(0.0, f64::max)
    }
}

pub fn invariant_polys() -> [Poly; 5] {
    [Poly::one(3), Poly::var(3, 0), Poly::var(3, 1), Poly::var(3, 2), Poly::norm_sq(3)]
}

/// F = μ(1 + 0.1 v₁e^{−|v|²/4}).
pub fn perturbed_maxwellian() -> AnalyticState {
    let m = mu();
    let bump = AnalyticState::term(&[0], Poly::var(3, 0).scale(C64::new(0.1, 0.0)), &[0.0; 3], 2f64.sqrt());
    m.add(&multiply(&m, &bump)).simplify()
}

pub fn invariant_study(engine: &CollisionEngine) -> Result<InvariantReport> {
    let f = perturbed_maxwellian();
    let m = mu();
    let rm = sqrt_mu();
    let h = poly_sqrt_mu(Poly::monomial(&[1, 1, 0], 1.0));
    let phis = invariant_polys();
    let mut tests: Vec<AnalyticState> = phis.iter().map(|p| poly_sqrt_mu(p.clone())).collect();
    tests.push(h.clone());
    let st: Vec<AnalyticState> = tests.iter().map(|t| multiply(&rm, t)).collect();
    let mut pairs: Vec<(&AnalyticState, &AnalyticState)> = vec![(&f, &f), (&m, &m)];
    for s in &st {
        pairs.push((&m, s));
        pairs.push((s, &m));
    }
    let outer = engine.outer_nodes(1.0);
    let points: Vec<V3> = outer.iter().map(|o| o.v).collect();
    let (vals, abs) = engine.q_panels(&pairs, &points)?;
    let npan = engine.n_panels();
    let np = pairs.len();
    let value = |pt: usize, q: usize| -> Result<f64> {
        let p: Vec<f64> = (0..npan).map(|i| vals[pt][i * np + q]).collect();
        let sc: f64 = (0..npan).map(|i| abs[pt][i * np + q]).sum();
        Ok(finish(&engine.kernel, &p, sc)?.value)
    };
    let mut q_mom = [0.0; 5];
    let mut q_scale = 0.0;
    let mut q_mu_mu: f64 = 0.0;
    let mut l2 = vec![0.0; tests.len()];
    for (pt, o) in outer.iter().enumerate() {
        let v = &o.v;
        let q = value(pt, 0)?;
        q_mu_mu = q_mu_mu.max(value(pt, 1)?.abs());
        let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        for (qm, p) in q_mom.iter_mut().zip(&phis) {
            *qm += o.w * q * p.eval(v).re;
        }
        q_scale += o.w * q.abs() * (1.0 + r2);
        let inv = 1.0 / eval_real(&rm, v);
        for (i, l) in l2.iter_mut().enumerate() {
            let lv = (value(pt, 2 + 2 * i)? + value(pt, 3 + 2 * i)?) * inv;
            *l += o.w * lv * lv;
        }
    }
    let k0 = [0i64];
    let l_ref = l2[5].sqrt() / h.l2_v(&k0);
    let mut l_norms = [0.0; 5];
    let mut l_scales = [0.0; 5];
    for i in 0..5 {
        l_norms[i] = l2[i].sqrt();
        l_scales[i] = l_ref * tests[i].l2_v(&k0);
    }
    Ok(InvariantReport {
        q_moments: q_mom.map(f64::abs),
        q_scale,
        l_norms,
        l_scales,
        q_mu_mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_gk;
    use proptest::prelude::*;

    fn engine(s: f64) -> CollisionEngine {
        CollisionEngine::new(KernelSpec::new(0.0, s), QuadratureSpec::new(8, 8, 8, 6)).unwrap()
    }

    /// −⟨ℒh,h⟩/‖h‖² for h = v₁v₂√μ, γ = 0: (3π/2)∫₀^{π/2} θ^{−1−2s} sin²θ dθ.
    fn burnett(s: f64) -> f64 {
        let (i, _) = adaptive_gk(|t: f64| t.powf(-1.0 - 2.0 * s) * t.sin().powi(2), 0.0, FRAC_PI_2, &[], 1e-14, 0.0);
        1.5 * PI * i
    }

    fn v1v2() -> AnalyticState {
        poly_sqrt_mu(Poly::monomial(&[1, 1, 0], 1.0))
    }

    #[test]
    fn post_collision_examples() {
        let (a, b) = post_collision(&[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert!(norm3(&[a[0], a[1] - 1.0, a[2]]) < 1e-15);
        assert!(norm3(&[b[0], b[1] + 1.0, b[2]]) < 1e-15);
        let (v, w) = ([0.3, -1.2, 2.0], [1.1, 0.4, -0.5]);
        let d = [v[0] - w[0], v[1] - w[1], v[2] - w[2]];
        let n = norm3(&d);
        let (a, b) = post_collision(&v, &w, &[d[0] / n, d[1] / n, d[2] / n]).unwrap();
        for i in 0..3 {
            assert!((a[i] - v[i]).abs() < 1e-14 && (b[i] - w[i]).abs() < 1e-14);
        }
        assert!(matches!(post_collision(&v, &w, &[1.0, 0.1, 0.0]), Err(LabError::NonUnitSigma(_))));
    }

    proptest! {
        #[test]
        fn post_collision_conserves(v in prop::array::uniform3(-5.0..5.0f64), w in prop::array::uniform3(-5.0..5.0f64),
                                    th in 0.0..PI, ph in 0.0..(2.0 * PI)) {
            let sg = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
            let (a, b) = post_collision(&v, &w, &sg).unwrap();
            let e0 = v.iter().chain(&w).map(|x| x * x).sum::<f64>();
            let e1 = a.iter().chain(&b).map(|x| x * x).sum::<f64>();
            prop_assert!((e0 - e1).abs() <= 1e-14 * e0.max(1.0) * 4.0);
            for i in 0..3 {
                prop_assert!((a[i] + b[i] - v[i] - w[i]).abs() < 1e-13);
            }
        }

        #[test]
        fn richardson_is_exact_on_model_tails(c0 in -2.0..2.0f64, c1 in -2.0..2.0f64, s in 0.1..0.9f64) {
            // S(θ) = S₀ − c₀θ^{2−2s} − c₁θ^{4−2s}
            let levels: Vec<f64> = (0..6)
                .map(|j| {
                    let t = THETA_BASE * 0.5f64.powi(j);
                    1.0 - c0 * t.powf(2.0 - 2.0 * s) - c1 * t.powf(4.0 - 2.0 * s)
                })
                .collect();
            let e = richardson(&levels, s, 2);
            prop_assert!((e.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn specs_validate() {
        assert!(KernelSpec::new(0.0, 0.5).validate().is_ok());
        assert!(KernelSpec::new(0.0, 1.0).validate().is_err());
        assert!(KernelSpec { theta_min: 0.1, ..KernelSpec::new(0.0, 0.5) }.validate().is_err());
        let c = KernelSpec::new(0.0, 0.5).cutoffs();
        assert!(c.windows(2).all(|w| w[1] < w[0]));
        assert!(QuadratureSpec::new(6, 8, 8, 8).validate().is_err());
        assert!(QuadratureSpec::new(8, 8, 7, 8).validate().is_err());
        assert!(QuadratureSpec::fine().validate().is_ok());
    }

    #[test]
    fn maxwellian_is_an_equilibrium() {
        let e = engine(0.5);
        let m = mu();
        for v in [[0.0, 0.0, 0.0], [1.0, -0.5, 0.3], [2.5, 0.0, 1.0]] {
            assert!(q_bilinear(&m, &m, &v, &e).unwrap().abs() < 1e-14);
            let (g, _) = gamma_and_l(&sqrt_mu(), &sqrt_mu(), &v, &e).unwrap();
            assert!(g.abs() < 1e-12);
        }
    }

    #[test]
    fn null_space_of_l() {
        let e = engine(0.5);
        let h = v1v2();
        for p in invariant_polys() {
            let phi = poly_sqrt_mu(p);
            for v in [[0.2, -0.7, 1.1], [1.5, 0.5, -0.4]] {
                let (_, lp) = gamma_and_l(&phi, &phi, &v, &e).unwrap();
                let (_, lh) = gamma_and_l(&h, &h, &v, &e).unwrap();
                assert!(lp.abs() < 1e-12 * lh.abs().max(1.0), "{lp:e}");
            }
        }
    }

    #[test]
    fn burnett_eigenvalue_for_maxwellian_molecules() {
        for s in [0.25, 0.5] {
            let e = engine(s);
            let h = v1v2();
            let m = dissipation_matrix(&[&h], &e).unwrap()[0][0];
            let nh = h.l2_v(&[0]);
            let want = burnett(s);
            assert!((m / (nh * nh) - want).abs() < 1e-8 * want, "s={s}: {} vs {want}", m / (nh * nh));
        }
        assert!((burnett(0.5) - 5.7270477561282815).abs() < 1e-12);
    }

    #[test]
    fn weak_form_agrees_with_strong_form() {
        let e = engine(0.5);
        let a = v1v2();
        let b = poly_sqrt_mu(Poly::var(3, 0).mul(&Poly::norm_sq(3)).add(&Poly::var(3, 0).scale(C64::new(-5.0, 0.0))));
        let funcs = [&a, &b];
        let strong = dissipation_matrix(&funcs, &e).unwrap();
        let weak = dissipation_matrix_weak(&funcs, &e).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let sc = strong[i][i].abs().max(strong[j][j].abs());
                assert!((strong[i][j] - weak[i][j]).abs() < 1e-2 * sc, "{i}{j}: {} {}", strong[i][j], weak[i][j]);
            }
        }
        // self-adjointness of ℒ
        assert!((strong[0][1] - strong[1][0]).abs() < 1e-8 * strong[0][0].abs());
        assert!(strong[0][0] > 0.0 && strong[1][1] > 0.0);
    }

    #[test]
    fn triple_norm_basics() {
        let e = engine(0.5);
        let zero = AnalyticState::zero(1, 3);
        assert_eq!(triple_norm(&zero, &e).unwrap(), 0.0);
        let h = v1v2();
        let n1 = triple_norm(&h, &e).unwrap();
        let n2 = triple_norm(&h.scale(C64::new(2.0, 0.0)), &e).unwrap();
        assert!(n1 > 0.0);
        assert!((n2 - 2.0 * n1).abs() < 1e-10 * n1);
    }

    #[test]
    fn raw_tail_grows_with_s_while_extrapolation_settles() {
        let f = perturbed_maxwellian();
        let v = [0.4, -0.3, 0.8];
        let mut gaps = Vec::new();
        for s in [0.25, 0.5, 0.75] {
            let e = engine(s);
            let d = q_bilinear_detail(&f, &f, &v, &e).unwrap();
            gaps.push((d.raw - d.value).abs() / d.value.abs());
            let deeper = CollisionEngine::new(
                KernelSpec { theta_min: PI / 256.0, ..KernelSpec::new(0.0, s) },
                QuadratureSpec::new(8, 8, 8, 6),
            )
            .unwrap();
            let d2 = q_bilinear_detail(&f, &f, &v, &deeper).unwrap();
            assert!((d2.value - d.value).abs() < 1e-4 * d.value.abs(), "s={s}: {} {}", d.value, d2.value);
        }
        assert!(gaps[0] < gaps[1] && gaps[1] < gaps[2], "{gaps:?}");
    }

    #[test]
    fn coercivity_probe_excludes_kernel_and_keeps_micro_modes() {
        let e = engine(0.5);
        let fam = vec![("sqrt_mu".to_string(), sqrt_mu()), ("v1v2".to_string(), v1v2())];
        let r = coercivity_probe(&fam, &e, 0, 1).unwrap();
        assert_eq!(r.excluded, vec!["sqrt_mu".to_string()]);
        assert_eq!(r.rows.len(), 1);
        assert!(r.rows[0].ratio_rela > 0.0 && r.c1_low > 0.0);
        // triple norm dominates the plain L² norm on the family
        assert!(r.rows[0].triple_micro_sq > 0.0);
    }

    #[test]
    fn trilinear_probe_basics() {
        let e = engine(0.5);
        let basis = [sqrt_mu(), poly_sqrt_mu(Poly::var(3, 0))];
        let refs: Vec<&AnalyticState> = basis.iter().collect();
        let named = vec![
            ("zero_f".to_string(), [vec![0.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]]),
            ("sqrtmu_v1_v1".to_string(), [vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]]),
        ];
        let r = trilinear_probe(&refs, &named, 4, 9, &e).unwrap();
        assert_eq!(r.rows[0].ratio, 0.0);
        assert!(r.rows[1].ratio.is_finite());
        assert_eq!(r.rows.len(), 6);
    }
}
