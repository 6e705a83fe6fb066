//! Gevrey-index fits, radius estimates, scaling exponents.

use crate::error::{LabError, Result};
use crate::quad::ln_factorial;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative amplitude below which modes are treated as noise.
pub const NOISE_FLOOR: f64 = 1e-13;

/// Ordinary least squares: returns (coefficients, standard errors, residual rms).
pub fn least_squares(x: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let n = y.len();
    let p = x.first().map_or(0, |r| r.len());
    if n < p || p == 0 {
        return Err(LabError::InsufficientData(format!("{n} rows for {p} unknowns")));
    }
    let a = DMatrix::from_fn(n, p, |i, j| x[i][j]);
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let beta = svd
        .solve(&b, 1e-14)
        .map_err(|e| LabError::InsufficientData(e.to_string()))?;
    let r = &b - &a * &beta;
    let rss = r.norm_squared();
    let rms = (rss / n as f64).sqrt();
    let dof = (n - p).max(1) as f64;
    let sigma2 = rss / dof;
    let ata = a.transpose() * &a;
    let stderr = match ata.try_inverse() {
        Some(inv) => (0..p).map(|j| (sigma2 * inv[(j, j)]).max(0.0).sqrt()).collect(),
        None => vec![f64::NAN; p],
    };
    Ok((beta.iter().copied().collect(), stderr, rms))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GevreyModel {
    /// log N_m = m log C + τ log m!
    NoIntercept,
    /// log N_m = log A + m log C + τ log m!
    WithIntercept,
    /// log N_m = log A + β log m + m log C + τ log m!; the m^β factor is
    /// the Laplace correction of sup_t t^{τm}e^{−at}.
    PowerLaw,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub tau_hat: f64,
    pub log_c: f64,
    pub log_prefactor: f64,
    pub residual_rms: f64,
    /// Exponent β of the m^β prefactor (PowerLaw only).
    pub power: f64,
    /// Standard errors in the order (τ, log C, log A, β).
    pub stderr: Vec<f64>,
    pub n_points: usize,
    pub window: (u32, u32),
    pub model: GevreyModel,
}

/// Fit the (m!)^τ C^m envelope to a derivative-norm sequence.
pub fn gevrey_fit(norms: &[f64], ms: &[u32], model: GevreyModel) -> Result<FitResult> {
    if norms.len() != ms.len() {
        return Err(LabError::DimensionMismatch("norms vs orders".into()));
    }
    let pts: Vec<(u32, f64)> = ms
        .iter()
        .zip(norms)
        .filter(|(_, n)| **n > 0.0 && n.is_finite())
        .map(|(m, n)| (*m, *n))
        .collect();
    if pts.len() < 4 {
        return Err(LabError::InsufficientData(format!("{} usable orders", pts.len())));
    }
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|(m, _)| {
            let mut r = vec![ln_factorial(*m), *m as f64];
            if model != GevreyModel::NoIntercept {
                r.push(1.0);
            }
            if model == GevreyModel::PowerLaw {
                r.push((*m as f64).ln());
            }
            r
        })
        .collect();
    let y: Vec<f64> = pts.iter().map(|(_, n)| n.ln()).collect();
    let (b, se, rms) = least_squares(&rows, &y)?;
    Ok(FitResult {
        tau_hat: b[0],
        log_c: b[1],
        log_prefactor: if model != GevreyModel::NoIntercept { b[2] } else { 0.0 },
        power: if model == GevreyModel::PowerLaw { b[3] } else { 0.0 },
        residual_rms: rms,
        stderr: se,
        n_points: pts.len(),
        window: (pts.first().unwrap().0, pts.last().unwrap().0),
        model,
    })
}

#[derive(Clone, Debug)]
pub struct RadiusFit {
    /// Decay rate c in log A ≈ b − c|k|^{1/τ}.
    pub c: f64,
    pub intercept: f64,
    /// Gevrey radius (c/τ)^τ: ‖∂^m f‖ ≲ R^{−m}(m!)^τ.
    pub radius: f64,
    pub n_used: usize,
    pub residual_rms: f64,
}

/// Fit log A(|k|) ≈ b − c|k|^{1/τ} over samples above the noise floor.
pub fn radius_estimate(samples: &[(f64, f64)], tau: f64) -> Result<RadiusFit> {
    let amax = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let used: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|(_, a)| *a > NOISE_FLOOR * amax && *a > 0.0)
        .collect();
    if used.len() < 4 {
        return Err(LabError::InsufficientData(format!("{} modes above floor", used.len())));
    }
    let rows: Vec<Vec<f64>> = used.iter().map(|(k, _)| vec![1.0, -k.powf(1.0 / tau)]).collect();
    let y: Vec<f64> = used.iter().map(|(_, a)| a.ln()).collect();
    let (b, _, rms) = least_squares(&rows, &y)?;
    let c = b[1];
    Ok(RadiusFit {
        c,
        intercept: b[0],
        radius: if c > 0.0 { (c / tau).powf(tau) } else { 0.0 },
        n_used: used.len(),
        residual_rms: rms,
    })
}

#[derive(Clone, Debug)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub ci: (f64, f64),
    pub n: usize,
    /// Set when the series is non-monotone (noise-dominated).
    pub flag: Option<String>,
}

/// Log–log OLS slope with a percentile bootstrap CI (fixed seed).
pub fn scaling_exponent(ts: &[f64], ys: &[f64], n_boot: usize, seed: u64) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(ys)
        .filter(|(t, y)| **t > 0.0 && **y > 0.0)
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < 5 {
        return Err(LabError::InsufficientData(format!("{} positive points", pts.len())));
    }
    let span = pts.iter().map(|p| p.0).fold(f64::MIN, f64::max) - pts.iter().map(|p| p.0).fold(f64::MAX, f64::min);
    if span < 10f64.ln() - 1e-12 {
        return Err(LabError::InsufficientData("time points span less than a decade".into()));
    }
    let fit = |p: &[(f64, f64)]| -> Option<(f64, f64)> {
        let n = p.len() as f64;
        let mx = p.iter().map(|q| q.0).sum::<f64>() / n;
        let my = p.iter().map(|q| q.1).sum::<f64>() / n;
        let sxx: f64 = p.iter().map(|q| (q.0 - mx).powi(2)).sum();
        if sxx <= 0.0 {
            return None;
        }
        let sxy: f64 = p.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
        let b = sxy / sxx;
        Some((b, my - b * mx))
    };
    let (slope, intercept) = fit(&pts).unwrap();
    let rows: Vec<Vec<f64>> = pts.iter().map(|p| vec![1.0, p.0]).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (_, se, _) = least_squares(&rows, &y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boots = Vec::with_capacity(n_boot);
    while boots.len() < n_boot {
        let sample: Vec<(f64, f64)> = (0..pts.len()).map(|_| pts[rng.gen_range(0..pts.len())]).collect();
        if let Some((b, _)) = fit(&sample) {
            boots.push(b);
        }
    }
    boots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| boots[((p * (boots.len() - 1) as f64).round() as usize).min(boots.len() - 1)];
    let inc = pts.windows(2).all(|w| w[1].1 >= w[0].1);
    let dec = pts.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(SlopeFit {
        slope,
        intercept,
        stderr: se[1],
        ci: (q(0.025), q(0.975)),
        n: pts.len(),
        flag: if inc || dec { None } else { Some("non-monotone series".into()) },
    })
}

/// Exponential decay rate λ in y ≈ A e^{−λt}.
pub fn exponential_rate(ts: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let rows: Vec<Vec<f64>> = ts.iter().map(|t| vec![1.0, *t]).collect();
    let y: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (b, se, _) = least_squares(&rows, &y)?;
    Ok((-b[1], se[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_gevrey() {
        let ms: Vec<u32> = (1..=12).collect();
        let n: Vec<f64> = ms.iter().map(|&m| (m as f64 * 2f64.ln() + 0.5 * ln_factorial(m)).exp()).collect();
        for model in [GevreyModel::NoIntercept, GevreyModel::WithIntercept, GevreyModel::PowerLaw] {
            let f = gevrey_fit(&n, &ms, model).unwrap();
            assert!((f.tau_hat - 0.5).abs() < 1e-9);
            assert!((f.log_c - 2f64.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn spec_grid_of_synthetic_cases() {
        let ms: Vec<u32> = (1..=12).collect();
        for tau in [0.5, 1.0, 2.0] {
            for c in [0.5f64, 2.0, 10.0] {
                let n: Vec<f64> = ms.iter().map(|&m| (m as f64 * c.ln() + tau * ln_factorial(m)).exp()).collect();
                let f = gevrey_fit(&n, &ms, GevreyModel::NoIntercept).unwrap();
                assert!((f.tau_hat - tau).abs() < 1e-9 && (f.log_c - c.ln()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn power_law_prefactor() {
        let ms: Vec<u32> = (2..=16).collect();
        let n: Vec<f64> = ms
            .iter()
            .map(|&m| (0.3 - 0.7 * (m as f64).ln() + 1.1 * m as f64 + 1.5 * ln_factorial(m)).exp())
            .collect();
        let f = gevrey_fit(&n, &ms, GevreyModel::PowerLaw).unwrap();
        assert!((f.tau_hat - 1.5).abs() < 1e-8 && (f.power + 0.7).abs() < 1e-7);
        // the intercept-only model is biased on the same data
        let g = gevrey_fit(&n, &ms, GevreyModel::WithIntercept).unwrap();
        assert!((g.tau_hat - 1.5).abs() > 1e-3);
    }

    #[test]
    fn too_few_orders() {
        assert!(gevrey_fit(&[1.0, 2.0, 3.0], &[1, 2, 3], GevreyModel::WithIntercept).is_err());
    }

    #[test]
    fn synthetic_radius() {
        let s: Vec<(f64, f64)> = (1..=20).map(|k| (k as f64, (-0.3 * k as f64).exp())).collect();
        let r = radius_estimate(&s, 1.0).unwrap();
        assert!((r.c - 0.3).abs() < 1e-12 && (r.radius - 0.3).abs() < 1e-12);
        let scaled: Vec<(f64, f64)> = s.iter().map(|(k, a)| (*k, 7.0 * a)).collect();
        let r2 = radius_estimate(&scaled, 1.0).unwrap();
        assert!((r2.c - r.c).abs() < 1e-12);
        assert!(radius_estimate(&s[..3], 1.0).is_err());
    }

    #[test]
    fn synthetic_slope() {
        let ts: Vec<f64> = (0..9).map(|i| 0.25 * 2f64.powf(i as f64 / 2.0)).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 0.7 * t * t).collect();
        let f = scaling_exponent(&ts, &ys, 200, 1).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-6);
        assert!(f.ci.0 <= f.slope + 1e-9 && f.ci.1 >= f.slope - 1e-9);
        assert!(f.flag.is_none());
    }

    #[test]
    fn exponential() {
        let ts: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 2.0 * (-0.8 * t).exp()).collect();
        assert!((exponential_rate(&ts, &ys).unwrap().0 - 0.8).abs() < 1e-12);
    }
}
