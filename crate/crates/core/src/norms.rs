//! Mixed Lebesgue norms L^p_k L^q_T L^2_v and Gevrey multiplier weights.

use crate::error::{LabError, Result};
use crate::fields::{KvField, PhaseSpectrum};

#[derive(Clone, Debug, PartialEq)]
pub struct NormSpec {
    pub p: f64,
    /// `f64::INFINITY` selects the discrete-time supremum.
    pub q: f64,
    /// Exponent w of the weight ⟨k⟩^w.
    pub k_weight: Option<f64>,
    /// Exponent θ of the weight t^θ.
    pub t_weight: Option<f64>,
}

impl NormSpec {
    pub fn new(p: f64, q: f64) -> Self {
        Self { p, q, k_weight: None, t_weight: None }
    }

    /// L¹_k L^∞_T L²_v.
    pub fn l1_linf() -> Self {
        Self::new(1.0, f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) || !(self.q >= 1.0) {
            return Err(LabError::InvalidParam("norm exponents must be >= 1".into()));
        }
        Ok(())
    }
}

/// ⟨k⟩ = (1+|k|²)^{1/2}.
pub fn bracket_k(k: &[i64]) -> f64 {
    (1.0 + k.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt()
}

/// L^q over a sampled time series with the trapezoid rule (q < ∞) or the max.
pub fn lq_time(times: &[f64], vals: &[f64], q: f64) -> f64 {
    if q.is_infinite() || times.len() == 1 {
        return vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    let mut acc = 0.0;
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        acc += 0.5 * dt * (vals[i].abs().powf(q) + vals[i - 1].abs().powf(q));
    }
    acc.powf(1.0 / q)
}

/// ℓ^p over a list of nonnegative values.
pub fn lp_sum(vals: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return vals.iter().fold(0.0f64, |m, v| m.max(*v));
    }
    vals.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Nested norm of a matrix of per-(t, k) L²_v norms: v, then T, then k.
pub fn mixed_norm_table(times: &[f64], ks: &[Vec<i64>], l2: &[Vec<f64>], spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    if times.is_empty() {
        return Err(LabError::EmptyTrajectory);
    }
    let mut per_k = Vec::with_capacity(ks.len());
    for (ki, k) in ks.iter().enumerate() {
        let series: Vec<f64> = times
            .iter()
            .enumerate()
            .map(|(ti, &t)| {
                let w = spec.t_weight.map_or(1.0, |th| t.powf(th));
                w * l2[ti][ki]
            })
            .collect();
        let wk = spec.k_weight.map_or(1.0, |w| bracket_k(k).powf(w));
        per_k.push(wk * lq_time(times, &series, spec.q));
    }
    Ok(lp_sum(&per_k, spec.p))
}

/// ‖g‖_{L^p_k L^q_T L^2_v} over a trajectory; times come from the snapshot tags.
pub fn mixed_norm(traj: &[KvField], spec: &NormSpec) -> Result<f64> {
    let first = traj.first().ok_or(LabError::EmptyTrajectory)?;
    for f in traj {
        if f.modes != first.modes || f.grid != first.grid {
            return Err(LabError::DimensionMismatch("trajectory grids differ".into()));
        }
    }
    let times: Vec<f64> = traj.iter().map(|f| f.time_tag).collect();
    let ks: Vec<Vec<i64>> = (0..first.modes.len()).map(|i| first.modes.k(i)).collect();
    let l2: Vec<Vec<f64>> = traj
        .iter()
        .map(|f| (0..f.modes.len()).map(|i| f.l2_v(i)).collect())
        .collect();
    mixed_norm_table(&times, &ks, &l2, spec)
}

/// Multiply each (k, η) amplitude by e^{c(|k|²+|η|²)^{1/(2r)}}.
pub fn gevrey_weight(sp: &PhaseSpectrum, c: f64, r: f64) -> Result<PhaseSpectrum> {
    if c < 0.0 || r <= 0.0 {
        return Err(LabError::InvalidParam("need c >= 0 and r > 0".into()));
    }
    let mut out = sp.clone();
    let np = sp.n_points();
    for mi in 0..sp.modes.len() {
        let k2: f64 = sp.modes.k(mi).iter().map(|&x| (x * x) as f64).sum();
        for j in 0..np {
            let e2: f64 = sp.eta(j).iter().map(|x| x * x).sum();
            let w = (c * (k2 + e2).powf(0.5 / r)).exp();
            let z = &mut out.values[mi * np + j];
            *z *= w;
            if !(z.norm() <= 1e300) {
                return Err(LabError::Overflow(z.norm()));
            }
        }
    }
    Ok(out)
}
