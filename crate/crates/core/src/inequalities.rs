//! Sweeps for the standalone inequalities: binomial lattice, interpolation,
//! split lemma, Minkowski–Fubini, Gaussian-derivative bound.

use crate::analytic::hermite_he;
use crate::norms::lq_time;
use crate::quad::{binomial, golden_min};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// One CSV row: (inequality, parameter point, lhs, rhs, slack = lhs/rhs).
#[derive(Clone, Debug)]
pub struct Row {
    pub inequality: String,
    pub point: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub name: String,
    pub n_checked: usize,
    pub violations: usize,
    pub worst_slack: f64,
    pub worst_at: String,
    /// Worst row per parameter group.
    pub rows: Vec<Row>,
}

impl Report {
    fn new(name: &str) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    /// Record lhs ≤ rhs with a relative rounding allowance.
    fn check(&mut self, lhs: f64, rhs: f64, at: impl FnOnce() -> String) -> f64 {
        self.n_checked += 1;
        let slack = if rhs > 0.0 { lhs / rhs } else if lhs <= 0.0 { 0.0 } else { f64::INFINITY };
        if lhs > rhs * (1.0 + 1e-12) {
            self.violations += 1;
        }
        if slack > self.worst_slack || self.n_checked == 1 {
            self.worst_slack = slack;
            self.worst_at = at();
        }
        slack
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.n_checked > 0
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("inequality,point,lhs,rhs,slack\n");
        for r in &self.rows {
            s += &format!("{},{},{:e},{:e},{:e}\n", r.inequality, r.point, r.lhs, r.rhs, r.slack);
        }
        s
    }
}

fn bracket3(k: [i64; 3]) -> f64 {
    (1.0 + (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt()
}

/// Exhaustive check of ⟨k⟩^m ≤ Σ_{j=1}^{m−1}C(m,j)⟨k−ℓ⟩^j⟨ℓ⟩^{m−j} + 2⟨k−ℓ⟩^m + 2⟨ℓ⟩^m
/// ≤ 2Σ_{j=0}^{m}C(m,j)⟨k−ℓ⟩^j⟨ℓ⟩^{m−j} over k, ℓ ∈ {−range..range}³.
pub fn check_binomial_lattice(m_max: u32, range: i64) -> Report {
    assert!(m_max <= 12 && range <= 8, "exhaustive sweep limited to m <= 12, range <= 8");
    let mut rep = Report::new("binomial_lattice");
    let pts: Vec<[i64; 3]> = {
        let mut v = Vec::new();
        for a in -range..=range {
            for b in -range..=range {
                for c in -range..=range {
                    v.push([a, b, c]);
                }
            }
        }
        v
    };
    for m in 1..=m_max {
        let mut worst = Row {
            inequality: "binomial_lattice".into(),
            point: String::new(),
            lhs: 0.0,
            rhs: 1.0,
            slack: 0.0,
        };
        for k in &pts {
            let bk = bracket3(*k).powi(m as i32);
            for l in &pts {
                let d = bracket3([k[0] - l[0], k[1] - l[1], k[2] - l[2]]);
                let bl = bracket3(*l);
                let mut middle = 0.0;
                for j in 1..m {
                    middle += binomial(m, j) * d.powi(j as i32) * bl.powi((m - j) as i32);
                }
                let sharp = middle + 2.0 * d.powi(m as i32) + 2.0 * bl.powi(m as i32);
                let full = 2.0
                    * (0..=m)
                        .map(|j| binomial(m, j) * d.powi(j as i32) * bl.powi((m - j) as i32))
                        .sum::<f64>();
                let at = || format!("m={m};k={k:?};l={l:?}");
                let s1 = rep.check(bk, sharp, at);
                rep.check(sharp, full, || format!("m={m};k={k:?};l={l:?};second"));
                if s1 > worst.slack {
                    worst = Row {
                        inequality: "binomial_lattice".into(),
                        point: format!("m={m};k={:?};l={:?}", k, l),
                        lhs: bk,
                        rhs: sharp,
                        slack: s1,
                    };
                }
            }
        }
        rep.rows.push(worst);
    }
    rep
}

/// Log-spaced lattice with `per_decade` points per decade on [lo, hi].
pub fn log_lattice(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize;
    (0..=n)
        .map(|i| lo * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}

/// Frequency-side forms of the interpolation inequalities, with X = ⟨η⟩²:
///   (a) 1 ≤ εX^s + ε^{−(1−s)/s}X^{s−1};
///   (b) X^{−s} ≤ εX^s + ε^{−(1−2s)/(2s)}X^{s−1} for s ≤ 1/2,
///       X^{−s} ≤ εX^{s−1} + ε^{−(1−s)/(2s−1)}X^{−1} for s > 1/2.
#[derive(Clone, Debug)]
pub struct InterpolationReport {
    pub report: Report,
    /// Largest relative gap between the lattice-refined minimizer ε of (a)
    /// and the analytic ((1−s)/s)^s X^{−s}.
    pub minimizer_rel_err: f64,
    /// Smallest RHS/LHS of (a) at the minimizer; analytic value (1−s)^{s−1}s^{−s}.
    pub min_ratio: f64,
}

pub fn interpolation_rhs_a(s: f64, eps: f64, x: f64) -> f64 {
    eps * x.powf(s) + eps.powf(-(1.0 - s) / s) * x.powf(s - 1.0)
}

pub fn interpolation_rhs_b(s: f64, eps: f64, x: f64) -> f64 {
    if s <= 0.5 {
        eps * x.powf(s) + eps.powf(-(1.0 - 2.0 * s) / (2.0 * s)) * x.powf(s - 1.0)
    } else {
        eps * x.powf(s - 1.0) + eps.powf(-(1.0 - s) / (2.0 * s - 1.0)) / x
    }
}

pub fn check_interpolation(s: f64, per_decade: usize) -> InterpolationReport {
    assert!(s > 0.0 && s < 1.0);
    let mut rep = Report::new("interpolation");
    let eps = log_lattice(1e-6, 1e6, per_decade);
    let mut etas = vec![0.0];
    etas.extend(log_lattice(1e-3, 1e4, per_decade));
    let mut worst_a = (0.0, 0.0, 0.0);
    let mut worst_b = (0.0, 0.0, 0.0);
    for &eta in &etas {
        let x = 1.0 + eta * eta;
        for &e in &eps {
            let ra = interpolation_rhs_a(s, e, x);
            let sa = rep.check(1.0, ra, || format!("a;s={s};eps={e:e};eta={eta:e}"));
            if sa > worst_a.0 {
                worst_a = (sa, e, eta);
            }
            let lb = x.powf(-s);
            let rb = interpolation_rhs_b(s, e, x);
            let sb = rep.check(lb, rb, || format!("b;s={s};eps={e:e};eta={eta:e}"));
            if sb > worst_b.0 {
                worst_b = (sb, e, eta);
            }
        }
    }
    for (tag, w) in [("a", worst_a), ("b", worst_b)] {
        rep.rows.push(Row {
            inequality: format!("interpolation_{tag}"),
            point: format!("s={s};eps={:e};eta={:e}", w.1, w.2),
            lhs: w.0,
            rhs: 1.0,
            slack: w.0,
        });
    }
    // minimizer of the RHS of (a) in ε, refined from the lattice argmin
    let mut rel = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    for &eta in etas.iter().step_by(per_decade.max(1) / 4 + 1) {
        let x = 1.0 + eta * eta;
        let (i0, _) = eps
            .iter()
            .enumerate()
            .map(|(i, &e)| (i, interpolation_rhs_a(s, e, x)))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        let lo = eps[i0.saturating_sub(1)].ln();
        let hi = eps[(i0 + 1).min(eps.len() - 1)].ln();
        let (le, val) = golden_min(|le| interpolation_rhs_a(s, le.exp(), x), lo, hi, 1e-12);
        let analytic = ((1.0 - s) / s).powf(s) * x.powf(-s);
        rel = rel.max((le.exp() / analytic - 1.0).abs());
        min_ratio = min_ratio.min(val);
    }
    InterpolationReport { report: rep, minimizer_rel_err: rel, min_ratio }
}

/// Split-lemma probe with symbols φ_j = i(p_j(t)k + q_j(t)η) on random spectra.
#[derive(Clone, Debug)]
pub struct SplitPair {
    pub p1: fn(f64) -> f64,
    pub q1: fn(f64) -> f64,
    pub p2: fn(f64) -> f64,
    pub q2: fn(f64) -> f64,
}

/// Random spectra F(k, η) for k ∈ {−k_max..k_max}, η on a centered grid, at
/// each time of `times`; checks the sup-in-time and L²-in-time forms of the
/// (A₁+A₂)^m split per k, and |A₁^mA₂^n| ≤ |A₁^{m+n}| + |A₂^{m+n}| in H^r_v.
pub fn check_split_lemma(pair: &SplitPair, m_max: u32, times: &[f64], seed: u64, r: f64) -> Report {
    let mut rep = Report::new("split_lemma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k_max = 4i64;
    let n_eta = 96usize;
    let deta = 0.25;
    let eta = |j: usize| (j as f64 - (n_eta / 2) as f64) * deta;
    let nk = (2 * k_max + 1) as usize;
    let spec: Vec<Vec<(f64, f64)>> = (0..nk)
        .map(|_| {
            (0..n_eta)
                .map(|j| {
                    let env = (-0.05 * eta(j).powi(2)).exp();
                    (env * rng.gen_range(-1.0..1.0), env * rng.gen_range(-1.0..1.0))
                })
                .collect()
        })
        .collect();
    let norm_with = |mi: usize, f: &dyn Fn(f64, f64) -> f64, wr: f64| -> f64 {
        let k = mi as f64 - k_max as f64;
        let s: f64 = (0..n_eta)
            .map(|j| {
                let e = eta(j);
                let a = spec[mi][j].0.powi(2) + spec[mi][j].1.powi(2);
                let w = (1.0 + e * e).powf(wr);
                w * a * f(k, e).powi(2)
            })
            .sum();
        (s * deta / (2.0 * PI)).sqrt()
    };
    for m in 1..=m_max {
        let mi_ = m as i32;
        // per time, per k
        let mut sum_lhs_sup = 0.0;
        let mut sum_rhs_sup = 0.0;
        let mut sum_lhs_l2 = 0.0;
        let mut sum_rhs_l2 = 0.0;
        for mi in 0..nk {
            let mut lhs_t = Vec::new();
            let mut a1_t = Vec::new();
            let mut a2_t = Vec::new();
            for &t in times {
                let (p1, q1, p2, q2) = ((pair.p1)(t), (pair.q1)(t), (pair.p2)(t), (pair.q2)(t));
                let sum = |k: f64, e: f64| (p1 * k + q1 * e + p2 * k + q2 * e).abs().powi(mi_);
                let f1 = |k: f64, e: f64| (p1 * k + q1 * e).abs().powi(mi_);
                let f2 = |k: f64, e: f64| (p2 * k + q2 * e).abs().powi(mi_);
                let l = norm_with(mi, &sum, 0.0);
                let a = norm_with(mi, &f1, 0.0);
                let b = norm_with(mi, &f2, 0.0);
                rep.check(l, 2f64.powi(mi_) * (a + b), || format!("pointwise;m={m};k={mi};t={t}"));
                lhs_t.push(l);
                a1_t.push(a);
                a2_t.push(b);
                // fmn for every split m = a + b
                for n in 0..=m {
                    let (ma, nb) = (n as i32, (m - n) as i32);
                    let mixed = |k: f64, e: f64| {
                        (p1 * k + q1 * e).abs().powi(ma) * (p2 * k + q2 * e).abs().powi(nb)
                    };
                    let lm = norm_with(mi, &mixed, r);
                    let r1 = norm_with(mi, &f1, r);
                    let r2 = norm_with(mi, &f2, r);
                    rep.check(lm, r1 + r2, || format!("fmn;m={ma};n={nb};k={mi};t={t}"));
                }
            }
            let sup = |v: &[f64]| lq_time(times, v, f64::INFINITY);
            let l2 = |v: &[f64]| lq_time(times, v, 2.0);
            sum_lhs_sup += sup(&lhs_t);
            sum_rhs_sup += 2f64.powi(mi_) * (sup(&a1_t) + sup(&a2_t));
            sum_lhs_l2 += l2(&lhs_t);
            sum_rhs_l2 += 2f64.powi(mi_) * (l2(&a1_t) + l2(&a2_t));
        }
        let s1 = rep.check(sum_lhs_sup, sum_rhs_sup, || format!("sup_form;m={m}"));
        let s2 = rep.check(sum_lhs_l2, sum_rhs_l2, || format!("l2_form;m={m}"));
        rep.rows.push(Row {
            inequality: "split_sup".into(),
            point: format!("m={m}"),
            lhs: sum_lhs_sup,
            rhs: sum_rhs_sup,
            slack: s1,
        });
        rep.rows.push(Row {
            inequality: "split_l2".into(),
            point: format!("m={m}"),
            lhs: sum_lhs_l2,
            rhs: sum_rhs_l2,
            slack: s2,
        });
    }
    rep
}

/// Scalar facts behind the split lemma: (p+q)^{2m} ≤ (2p)^{2m}+(2q)^{2m} and
/// |a^m b^n| ≤ |a|^{m+n}+|b|^{m+n}, on random samples.
pub fn check_split_scalars(m_max: u32, n_samples: usize, seed: u64) -> Report {
    let mut rep = Report::new("split_scalars");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_samples {
        let p: f64 = rng.gen_range(0.0..3.0);
        let q: f64 = rng.gen_range(0.0..3.0);
        for m in 1..=m_max as i32 {
            rep.check((p + q).powi(2 * m), (2.0 * p).powi(2 * m) + (2.0 * q).powi(2 * m), || {
                format!("pq;p={p};q={q};m={m}")
            });
            for n in 0..=m {
                rep.check(p.powi(m) * q.powi(n), p.powi(m + n) + q.powi(m + n), || {
                    format!("mn;p={p};q={q};m={m};n={n}")
                });
            }
        }
    }
    rep
}

/// Minkowski–Fubini estimate on random nonnegative tables
/// a_j(t,k) (for ‖f_j‖) and b_j(t,k) (for |||g_j|||) on a 1-D k lattice.
pub fn check_minkowski(j0: usize, n_t: usize, k_max: i64, n_trials: usize, seed: u64) -> Report {
    let mut rep = Report::new("minkowski_fubini");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nk = (2 * k_max + 1) as usize;
    let times: Vec<f64> = (0..n_t).map(|i| i as f64 / (n_t - 1) as f64).collect();
    for trial in 0..n_trials {
        let factorized = trial % 2 == 0;
        let gen = |rng: &mut ChaCha8Rng| -> Vec<Vec<Vec<f64>>> {
            (0..j0)
                .map(|_| {
                    let tk: Vec<f64> = (0..nk).map(|_| rng.gen_range(0.0..1.0)).collect();
                    let tt: Vec<f64> = (0..n_t).map(|_| rng.gen_range(0.0..1.0)).collect();
                    (0..n_t)
                        .map(|ti| {
                            (0..nk)
                                .map(|ki| {
                                    if factorized {
                                        tt[ti] * tk[ki]
                                    } else {
                                        rng.gen_range(0.0..1.0)
                                    }
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        };
        let a = gen(&mut rng);
        let b = gen(&mut rng);
        // LHS: Σ_k [∫ (Σ_ℓ Σ_j a_j(t,k−ℓ) b_j(t,ℓ))² dt]^{1/2}, k over the full convolution support
        let mut lhs = 0.0;
        for k in -2 * k_max..=2 * k_max {
            let series: Vec<f64> = (0..n_t)
                .map(|ti| {
                    let mut acc = 0.0;
                    for j in 0..j0 {
                        for l in -k_max..=k_max {
                            let d = k - l;
                            if d.abs() <= k_max {
                                acc += a[j][ti][(d + k_max) as usize] * b[j][ti][(l + k_max) as usize];
                            }
                        }
                    }
                    acc
                })
                .collect();
            lhs += lq_time(&times, &series, 2.0);
        }
        let mut rhs = 0.0;
        for j in 0..j0 {
            let sup_a: f64 = (0..nk)
                .map(|ki| {
                    let s: Vec<f64> = (0..n_t).map(|ti| a[j][ti][ki]).collect();
                    lq_time(&times, &s, f64::INFINITY)
                })
                .sum();
            let l2_b: f64 = (0..nk)
                .map(|ki| {
                    let s: Vec<f64> = (0..n_t).map(|ti| b[j][ti][ki]).collect();
                    lq_time(&times, &s, 2.0)
                })
                .sum();
            rhs += sup_a * l2_b;
        }
        let sl = rep.check(lhs, rhs, || format!("trial={trial}"));
        rep.rows.push(Row {
            inequality: "minkowski_fubini".into(),
            point: format!("trial={trial};factorized={factorized}"),
            lhs,
            rhs,
            slack: sl,
        });
    }
    rep
}

/// |∂_{v₁}^p μ^{1/2}(v)| ≤ 2^p p! μ^{1/4}(v) in three dimensions, with
/// ∂^p μ^{1/2} = (2π)^{−3/4}(−1)^p 2^{−p/2} He_p(v₁/√2) e^{−|v|²/4}.
pub fn check_gaussian_derivative_bound(p_max: u32, r_max: f64, n_r: usize) -> Report {
    let mut rep = Report::new("gaussian_derivative_bound");
    let c = (2.0 * PI).powf(-0.75);
    for p in 0..=p_max {
        let fact: f64 = (1..=p).map(|j| j as f64).product();
        let mut worst = 0.0f64;
        for i in 0..=n_r {
            let r = r_max * i as f64 / n_r as f64;
            // v = (v1, v⊥) with |v| = r, sweep the angle of v1
            for a in 0..=16 {
                let v1 = r * (PI * a as f64 / 16.0).cos();
                let lhs = c * 2f64.powf(-(p as f64) / 2.0) * hermite_he(p, v1 / 2f64.sqrt()).abs()
                    * (-0.25 * r * r).exp();
                let rhs = 2f64.powi(p as i32) * fact * (2.0 * PI).powf(-0.375) * (-0.125 * r * r).exp();
                worst = worst.max(rep.check(lhs, rhs, || format!("p={p};r={r};v1={v1}")));
            }
        }
        rep.rows.push(Row {
            inequality: "gaussian_derivative_bound".into(),
            point: format!("p={p}"),
            lhs: worst,
            rhs: 1.0,
            slack: worst,
        });
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_small() {
        let r = check_binomial_lattice(3, 2);
        assert!(r.passed(), "{:?}", r.worst_at);
        assert!(r.worst_slack <= 1.0);
    }

    #[test]
    fn lattice_m1_origin() {
        // m=1, k=ℓ=0: 1 ≤ 2·1 + 2·1
        let r = check_binomial_lattice(1, 0);
        assert!(r.passed());
        assert!((r.rows[0].slack - 0.25).abs() < 1e-15);
    }

    #[test]
    fn interpolation_origin_point() {
        assert!((interpolation_rhs_a(0.5, 1.0, 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation_sweep_half() {
        let r = check_interpolation(0.5, 16);
        assert!(r.report.passed());
        assert!(r.minimizer_rel_err < 0.01);
        let s: f64 = 0.5;
        let ana = (1.0 - s).powf(s - 1.0) * s.powf(-s);
        assert!((r.min_ratio - ana).abs() < 1e-6);
    }

    #[test]
    fn split_scalars_hold() {
        assert!(check_split_scalars(6, 200, 1).passed());
    }

    #[test]
    fn split_dx_dv() {
        let pair = SplitPair { p1: |_| 1.0, q1: |_| 0.0, p2: |_| 0.0, q2: |_| 1.0 };
        let r = check_split_lemma(&pair, 1, &[1.0], 7, 0.0);
        assert!(r.passed(), "{}", r.worst_at);
    }

    #[test]
    fn split_a2_zero() {
        let pair = SplitPair { p1: |t| t, q1: |_| 1.0, p2: |_| 0.0, q2: |_| 0.0 };
        let r = check_split_lemma(&pair, 3, &[0.5, 1.0], 2, 0.0);
        assert!(r.passed());
        // first display: both sides agree up to 2^m
        for row in r.rows.iter().filter(|r| r.inequality == "split_sup") {
            let m: i32 = row.point[2..].parse().unwrap();
            assert!((row.slack * 2f64.powi(m) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn minkowski_holds() {
        let r = check_minkowski(2, 9, 3, 6, 4);
        assert!(r.passed(), "{}", r.worst_at);
    }

    #[test]
    fn gaussian_bound_holds() {
        let r = check_gaussian_derivative_bound(10, 6.0, 60);
        assert!(r.passed(), "{}", r.worst_at);
    }
}
