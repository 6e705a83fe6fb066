//! Splitting solver for ∂_t g + v·∂_x g + ⟨v⟩^γ(−Δ_v)^s g = 0 on 𝕋^d × [−V, V)^d.
//!
//! One step is Strang: transport(dt/2), diffusion(dt), transport(dt/2).
//! Transport is the exact phase e^{−i dt k·v}. Diffusion splits as the exact
//! multiplier e^{−τ|η|^{2s}} around an explicit Heun step for the remainder
//! (⟨v⟩^γ − 1)(−Δ_v)^s, which vanishes when γ = 0.

use crate::analytic::AnalyticState;
use crate::error::{LabError, Result};
use crate::fields::{japanese, sample_analytic, KvField, ModeSet, VelocityFft, VelocityGrid};
use crate::params::ModelParams;
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default stability constant for the explicit remainder.
pub const C_STAB: f64 = 0.9;

#[derive(Clone, Debug, PartialEq)]
pub struct FfpConfig {
    pub s: f64,
    pub gamma: f64,
    pub dt: f64,
    pub c_stab: f64,
    /// 2/3-rule truncation after each multiplication by ⟨v⟩^γ.
    pub dealias: bool,
}

impl FfpConfig {
    pub fn new(s: f64, gamma: f64, dt: f64) -> Self {
        Self { s, gamma, dt, c_stab: C_STAB, dealias: gamma != 0.0 }
    }

    pub fn from_params(p: &ModelParams) -> Self {
        let mut c = Self::new(p.s, p.gamma, p.dt);
        c.c_stab = p.tol("c_stab", C_STAB);
        c
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepStats {
    pub steps: usize,
    /// max dt / stability limit over all diffusion substeps.
    pub max_cfl: f64,
    /// Largest relative L² mass removed by one dealiasing pass.
    pub dealias_loss: f64,
    /// Largest relative L² increase over one full step.
    pub max_l2_increase: f64,
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub field: KvField,
    pub t: f64,
    pub stats: StepStats,
}

impl SolverState {
    pub fn new(field: KvField) -> Self {
        let t = field.time_tag;
        Self { field, t, stats: StepStats::default() }
    }
}

pub struct Ffp1Solver {
    pub cfg: FfpConfig,
    pub modes: ModeSet,
    pub grid: VelocityGrid,
    fft: VelocityFft,
    /// |η|^{2s} in FFT order.
    symbol: Vec<f64>,
    /// ⟨v⟩^γ − 1 on the grid.
    excess: Vec<f64>,
    /// Frequencies kept by the 2/3 rule.
    keep: Vec<bool>,
    eta_max: f64,
}

impl Ffp1Solver {
    pub fn new(cfg: FfpConfig, modes: ModeSet, grid: VelocityGrid) -> Result<Self> {
        if !(cfg.s > 0.0 && cfg.s < 1.0) || !(0.0..=1.0).contains(&cfg.gamma) {
            return Err(LabError::InvalidParam("need 0 < s < 1 and 0 <= gamma <= 1".into()));
        }
        if !(cfg.dt > 0.0) {
            return Err(LabError::InvalidParam("dt must be positive".into()));
        }
        if modes.dim != grid.dim {
            return Err(LabError::DimensionMismatch("transport needs d_x = d_v".into()));
        }
        let de = grid.deta();
        let n = grid.len();
        let mut symbol = Vec::with_capacity(n);
        let mut keep = Vec::with_capacity(n);
        let mut excess = Vec::with_capacity(n);
        let cut = grid.n as f64 / 3.0;
        for idx in 0..n {
            let f = grid.freq_indices(idx);
            let e2: f64 = f.iter().map(|&j| (j as f64 * de).powi(2)).sum();
            symbol.push(e2.powf(cfg.s));
            keep.push(f.iter().all(|&j| (j as f64).abs() < cut));
            excess.push(japanese(&grid.point(idx)).powf(cfg.gamma) - 1.0);
        }
        let eta_max = (grid.dim as f64).sqrt() * (grid.n / 2) as f64 * de;
        let fft = VelocityFft::new(&grid);
        Ok(Self { cfg, modes, grid, fft, symbol, excess, keep, eta_max })
    }

    /// Largest admissible diffusion substep: C_stab/(⟨V⟩^γ η_max^{2s}) when γ > 0.
    /// With γ = 0 the substep is an exact multiplier and no bound applies.
    pub fn stability_limit(&self) -> f64 {
        if self.cfg.gamma == 0.0 {
            return f64::INFINITY;
        }
        let vmax = self.grid.v_max * (self.grid.dim as f64).sqrt();
        self.cfg.c_stab / ((1.0 + vmax * vmax).powf(0.5 * self.cfg.gamma) * self.eta_max.powf(2.0 * self.cfg.s))
    }

    /// f̂(k, v) ← e^{−i dt k·v} f̂(k, v).
    pub fn step_transport(&self, st: &mut SolverState, dt: f64) {
        for mi in 0..self.modes.len() {
            let k = self.modes.k(mi);
            if k.iter().all(|&x| x == 0) {
                continue;
            }
            let grid = &self.grid;
            for (idx, z) in st.field.column_mut(mi).iter_mut().enumerate() {
                let v = grid.point(idx);
                let kv: f64 = k.iter().zip(&v).map(|(a, b)| *a as f64 * b).sum();
                *z *= C64::from_polar(1.0, -dt * kv);
            }
        }
    }

    fn exact_half(&self, col: &mut [C64], tau: f64) {
        self.fft.forward(col);
        for (z, p) in col.iter_mut().zip(&self.symbol) {
            *z *= (-tau * p).exp();
        }
        self.fft.inverse(col);
    }

    /// (⟨v⟩^γ − 1)(−Δ_v)^s g, dealiased; returns the relative mass removed.
    fn remainder(&self, g: &[C64], out: &mut Vec<C64>) -> f64 {
        out.clear();
        out.extend_from_slice(g);
        self.fft.forward(out);
        for (z, p) in out.iter_mut().zip(&self.symbol) {
            *z *= p;
        }
        self.fft.inverse(out);
        for (z, w) in out.iter_mut().zip(&self.excess) {
            *z *= w;
        }
        if !self.cfg.dealias {
            return 0.0;
        }
        self.fft.forward(out);
        let mut lost = 0.0;
        let mut total = 0.0;
        for (z, k) in out.iter_mut().zip(&self.keep) {
            total += z.norm_sqr();
            if !k {
                lost += z.norm_sqr();
                *z = C64::new(0.0, 0.0);
            }
        }
        self.fft.inverse(out);
        if total > 0.0 {
            (lost / total).sqrt()
        } else {
            0.0
        }
    }

    /// ∂_t g = −⟨v⟩^γ(−Δ_v)^s g over one substep of length dt.
    pub fn step_diffusion(&self, st: &mut SolverState, dt: f64) -> Result<()> {
        let limit = self.stability_limit();
        if dt > limit * (1.0 + 1e-12) {
            return Err(LabError::Unstable { dt, limit });
        }
        st.stats.max_cfl = st.stats.max_cfl.max(if limit.is_finite() { dt / limit } else { 0.0 });
        let explicit = self.cfg.gamma != 0.0;
        let mut b0 = Vec::new();
        let mut b1 = Vec::new();
        for mi in 0..self.modes.len() {
            let col = st.field.column_mut(mi);
            if !explicit {
                self.exact_half(col, dt);
                continue;
            }
            self.exact_half(col, 0.5 * dt);
            let l0 = self.remainder(col, &mut b0);
            let stage: Vec<C64> = col.iter().zip(&b0).map(|(g, b)| g - b * dt).collect();
            let l1 = self.remainder(&stage, &mut b1);
            for ((g, a), b) in col.iter_mut().zip(&b0).zip(&b1) {
                *g -= (a + b) * (0.5 * dt);
            }
            self.exact_half(col, 0.5 * dt);
            st.stats.dealias_loss = st.stats.dealias_loss.max(l0).max(l1);
        }
        Ok(())
    }

    /// One Strang step.
    pub fn step(&self, st: &mut SolverState, dt: f64) -> Result<()> {
        let before = st.field.l2();
        self.step_transport(st, 0.5 * dt);
        self.step_diffusion(st, dt)?;
        self.step_transport(st, 0.5 * dt);
        st.t += dt;
        st.field.time_tag = st.t;
        st.stats.steps += 1;
        let after = st.field.l2();
        if !st.field.is_finite() || after > 1e8 * before.max(1e-300) {
            return Err(LabError::BlowUp { step: st.stats.steps, t: st.t });
        }
        if before > 0.0 {
            st.stats.max_l2_increase = st.stats.max_l2_increase.max((after - before) / before);
        }
        Ok(())
    }

    /// Advance to `t_end` with steps of at most cfg.dt.
    pub fn advance_to(&self, st: &mut SolverState, t_end: f64) -> Result<()> {
        while st.t < t_end - 1e-12 * t_end.max(1.0) {
            let dt = self.cfg.dt.min(t_end - st.t);
            self.step(st, dt)?;
        }
        st.t = t_end;
        st.field.time_tag = t_end;
        Ok(())
    }

    /// Re⟨g, ⟨v⟩^γ(−Δ_v)^s g⟩_{L²_v} for one column.
    pub fn energy(&self, col: &[C64]) -> f64 {
        let mut lg = col.to_vec();
        self.fft.forward(&mut lg);
        for (z, p) in lg.iter_mut().zip(&self.symbol) {
            *z *= p;
        }
        self.fft.inverse(&mut lg);
        let h = self.grid.cell();
        col.iter()
            .zip(&lg)
            .zip(&self.excess)
            .map(|((g, l), e)| (g.conj() * l * (1.0 + e)).re)
            .sum::<f64>()
            * h
    }

    /// Largest C for which the diffusion substep with dt = C/(⟨V⟩^γ η_max^{2s})
    /// does not amplify white noise over `n_steps` substeps (bisection).
    pub fn critical_stability_constant(&self, n_steps: usize, seed: u64) -> f64 {
        if self.cfg.gamma == 0.0 {
            return f64::INFINITY;
        }
        let base = self.stability_limit() / self.cfg.c_stab;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise: Vec<C64> = (0..self.grid.len())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let grows = |c: f64| -> bool {
            let probe = Ffp1Solver {
                cfg: FfpConfig { c_stab: f64::INFINITY, ..self.cfg.clone() },
                modes: ModeSet::new(self.grid.dim, 0),
                grid: self.grid.clone(),
                fft: self.fft.clone(),
                symbol: self.symbol.clone(),
                excess: self.excess.clone(),
                keep: self.keep.clone(),
                eta_max: self.eta_max,
            };
            let mut f = KvField::zeros(probe.modes.clone(), self.grid.clone());
            f.values.copy_from_slice(&noise);
            let mut st = SolverState::new(f);
            let n0 = st.field.l2();
            for _ in 0..n_steps {
                if probe.step_diffusion(&mut st, c * base).is_err() {
                    return true;
                }
                if !st.field.is_finite() {
                    return true;
                }
            }
            st.field.l2() > n0
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while !grows(hi) && hi < 1e3 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if grows(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    X,
    V,
}

impl Direction {
    pub fn label(&self) -> &'static str {
        match self {
            Direction::X => "x",
            Direction::V => "v",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormRow {
    pub t: f64,
    pub m: u32,
    pub direction: Direction,
    pub value: f64,
}

/// L¹_k L²_v norm of ∂_{x₁}^m f and ∂_{v₁}^m f, time-weighted.
pub fn weighted_derivative_norms(f: &KvField, s: f64, t: f64, m_max: u32, fft: &VelocityFft) -> Vec<NormRow> {
    let mut rows = Vec::new();
    let de = f.grid.deta();
    let h = f.grid.cell();
    let px = (1.0 + 2.0 * s) / (2.0 * s);
    let pv = 1.0 / (2.0 * s);
    let mut xs = vec![0.0; m_max as usize + 1];
    let mut vs = vec![0.0; m_max as usize + 1];
    for mi in 0..f.modes.len() {
        let k1 = f.modes.k(mi)[0].unsigned_abs() as f64;
        let l2 = f.l2_v(mi);
        let mut spec = f.column(mi).to_vec();
        fft.forward(&mut spec);
        let eta1: Vec<f64> = (0..f.grid.len())
            .map(|idx| {
                let j = f.grid.freq_indices(idx)[0];
                if f.grid.is_nyquist(j) { 0.0 } else { j as f64 * de }
            })
            .collect();
        for m in 0..=m_max {
            xs[m as usize] += k1.powi(m as i32) * l2;
            // Parseval on the discrete transform
            let e: f64 = spec.iter().zip(&eta1).map(|(z, e)| z.norm_sqr() * e.powi(2 * m as i32)).sum();
            vs[m as usize] += (e * h / f.grid.len() as f64).sqrt();
        }
    }
    for m in 0..=m_max {
        rows.push(NormRow { t, m, direction: Direction::X, value: t.powf(px * m as f64) * xs[m as usize] });
        rows.push(NormRow { t, m, direction: Direction::V, value: t.powf(pv * m as f64) * vs[m as usize] });
    }
    rows
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<KvField>,
    pub rows: Vec<NormRow>,
    pub stats: StepStats,
    pub stability_limit: f64,
}

/// `n` log-spaced times in [t_min, t_max].
pub fn log_schedule(t_min: f64, t_max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![t_max];
    }
    (0..n)
        .map(|i| (t_min.ln() + (t_max / t_min).ln() * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Run from an analytic initial datum, emitting snapshots and weighted
/// derivative norms (orders 0..=m_max) at each requested time.
pub fn run_ffp1(
    solver: &Ffp1Solver,
    init: &AnalyticState,
    times: &[f64],
    m_max: u32,
) -> Result<Trajectory> {
    if times.windows(2).any(|w| w[1] <= w[0]) || times.first().map_or(false, |t| *t < 0.0) {
        return Err(LabError::InvalidParam("snapshot times must be increasing and >= 0".into()));
    }
    let field = sample_analytic(init, &solver.modes, &solver.grid)?;
    let mut st = SolverState::new(field);
    let mut snapshots = Vec::new();
    let mut rows = Vec::new();
    for &t in times {
        solver.advance_to(&mut st, t)?;
        rows.extend(weighted_derivative_norms(&st.field, solver.cfg.s, t, m_max, &solver.fft));
        snapshots.push(st.field.clone());
    }
    Ok(Trajectory { snapshots, rows, stats: st.stats, stability_limit: solver.stability_limit() })
}
