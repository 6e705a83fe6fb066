use kinlab::analytic::{AnalyticState, Poly};
use kinlab::collision::*;
use kinlab::diagnostics::*;
use kinlab::error::LabError;
use kinlab::ffp1::*;
use kinlab::fields::*;
use kinlab::inequalities::*;
use kinlab::kolmogorov::*;
use kinlab::macro_micro::*;
use kinlab::norms::NormSpec;
use kinlab::quad::adaptive_gk;
use kinlab::subelliptic::*;
use kinlab::vector_fields::*;
use kinlab::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

// Pinned tolerances.
const TAU_REL: f64 = 0.10;
const SLOPE_REL: f64 = 0.10;
const BRACKET_STABLE: f64 = 0.02;
const CLOSED_FORM: f64 = 1e-6;
const COMMUTATOR: f64 = 1e-9;
const INVARIANT_FINAL: f64 = 1e-6;
const ROUNDOFF_FLOOR: f64 = 1e-12;
const DISSIPATION_FLOOR: f64 = -1e-8;
const C1_STABLE: f64 = 0.10;
const PROJECTION: f64 = 1e-10;
const ORDER_RANGE: (f64, f64) = (1.8, 2.2);

/// Criteria that cannot hold as stated; see the analysis strings.
const EXPECTED_FAIL: &[(usize, &str)] = &[(
    8,
    "|lambda_k| <= 1 is false for every admissible cutoff: sup|lambda_k| = (|k|/<k>) sup_r r chi(r) and chi = 1 \
     on [-1,1] with zero slope at 1 forces r chi(r) > 1 just past r = 1; the other suites report zero violations",
)];

struct Outcome {
    pass: bool,
    detail: String,
    info: Vec<String>,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Outcome {
    let init = gaussian_packet(64);
    let mut pass = true;
    let mut parts = Vec::new();
    let mut info = Vec::new();
    for s in [0.25, 0.5, 0.75] {
        let collect = |st: &AnalyticState| {
            let mut norms = Vec::new();
            let mut ms = Vec::new();
            for m in 1..=16u32 {
                match derivative_norm_exact(st, s, 100.0, &[m], &[0], &NormSpec::l1_linf()) {
                    Ok(d) => {
                        norms.push(d.value);
                        ms.push(m);
                    }
                    Err(LabError::BelowNoiseFloor { .. }) => {}
                    Err(e) => panic!("derivative norm failed: {e}"),
                }
            }
            (norms, ms)
        };
        let (norms, ms) = collect(&init);
        let target = 1.0 / (2.0 * s);
        let fit = gevrey_fit(&norms, &ms, GevreyModel::PowerLaw).expect("fit");
        let ok = rel(fit.tau_hat, target) <= TAU_REL;
        pass &= ok;
        parts.push(format!("s={s}: tau_hat={:.3} (target {target:.3}, m<={})", fit.tau_hat, ms.last().unwrap()));
        for model in [GevreyModel::NoIntercept, GevreyModel::WithIntercept] {
            let f = gevrey_fit(&norms, &ms, model).expect("fit");
            info.push(format!("s={s} {model:?}: tau_hat={:.3}", f.tau_hat));
        }
    }
    Outcome { pass, detail: parts.join("; "), info }
}

fn criterion_2() -> Outcome {
    let init = flat_gaussian_packet(64);
    let ts: Vec<f64> = (0..9).map(|i| 0.25 * 2f64.powf(i as f64 / 2.0)).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for s in [0.25, 0.5] {
        let tau = 1.0 / (2.0 * s);
        let mut rx = Vec::new();
        let mut rv = Vec::new();
        for &t in &ts {
            let xs: Vec<(f64, f64)> = (1..=64).map(|k| (k as f64, weighted_mode_norm(&init, s, t, &[k], &[0], &[0]))).collect();
            rx.push(radius_estimate(&xs, tau).expect("x radius").radius);
            let vs: Vec<(f64, f64)> = (1..=60)
                .map(|j| {
                    let eta = 0.25 * j as f64;
                    (eta, (-exponent_integral(t, &[0.0], &[eta], s)).exp())
                })
                .collect();
            rv.push(radius_estimate(&vs, tau).expect("v radius").radius);
        }
        let sx = scaling_exponent(&ts, &rx, 200, 11).expect("x slope");
        let sv = scaling_exponent(&ts, &rv, 200, 12).expect("v slope");
        let (tx, tv) = ((1.0 + 2.0 * s) / (2.0 * s), 1.0 / (2.0 * s));
        let ok = rel(sx.slope, tx) <= SLOPE_REL && rel(sv.slope, tv) <= SLOPE_REL;
        pass &= ok;
        parts.push(format!(
            "s={s}: x slope {:.3} (target {tx:.3}, CI {:.3}..{:.3}), v slope {:.3} (target {tv:.3})",
            sx.slope, sx.ci.0, sx.ci.1, sv.slope
        ));
    }
    Outcome { pass, detail: parts.join("; "), info: vec![] }
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in [0.25, 0.5, 0.75] {
        let a = bracket_bounds_scan(s, 20_000, 5);
        let b = bracket_bounds_scan(s, 40_000, 5);
        let ok = a.c_lower > 0.0
            && a.c_lower <= a.c_upper
            && a.c_upper.is_finite()
            && rel(a.c_lower, b.c_lower) <= BRACKET_STABLE
            && rel(a.c_upper, b.c_upper) <= BRACKET_STABLE;
        pass &= ok;
        parts.push(format!(
            "s={s}: [{:.5}, {:.5}] doubled [{:.5}, {:.5}]",
            a.c_lower, a.c_upper, b.c_lower, b.c_upper
        ));
        // η = 0 family
        let mut worst: f64 = 0.0;
        for (t, k) in [(0.3, [1.0, 0.0, 0.0]), (2.0, [1.0, -2.0, 3.0]), (7.5, [0.0, 5.0, 1.0])] {
            let z = [0.0; 3];
            let r = exponent_integral(t, &k, &z, s) / bracket_denominator(t, &k, &z, s);
            let rq = exponent_integral_quadrature(t, &k, &z, s) / bracket_denominator(t, &k, &z, s);
            worst = worst.max((r - 1.0 / (2.0 * s + 1.0)).abs()).max((rq - 1.0 / (2.0 * s + 1.0)).abs());
        }
        pass &= worst <= CLOSED_FORM;
        parts.push(format!("s={s}: eta=0 ratio error {worst:.1e}"));
    }
    let mut worst: f64 = 0.0;
    for (t, k) in [(0.5, [1.0, 0.0, 0.0]), (3.0, [2.0, -1.0, 4.0])] {
        let eta: Vec<f64> = k.iter().map(|x| -0.5 * t * x).collect();
        for i in [exponent_integral(t, &k, &eta, 0.5), exponent_integral_quadrature(t, &k, &eta, 0.5)] {
            worst = worst.max((i / bracket_denominator(t, &k, &eta, 0.5) - 1.0 / 6.0).abs());
        }
    }
    pass &= worst <= CLOSED_FORM;
    parts.push(format!("s=1/2 cancellation point error {worst:.1e}"));
    Outcome { pass, detail: parts.join("; "), info: vec![] }
}

fn criterion_4() -> Outcome {
    let fams = test_families();
    let kinds = [OpKind::H, OpKind::P1, OpKind::Hdelta(0.7), OpKind::P2, OpKind::Dx, OpKind::Dv];
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for kind in kinds {
        for s in [0.3, 0.5, 0.8] {
            for m in 1..=6 {
                for fam in &fams {
                    for t in [0.4, 1.3] {
                        let r = commutator_residual(&FieldOp::new(kind, s, m), fam, t).expect("residual");
                        worst = worst.max(r.relative);
                        n += 1;
                    }
                }
            }
        }
    }
    Outcome {
        pass: worst <= COMMUTATOR,
        detail: format!("{n} cases over {} families, worst relative residual {worst:.2e}", fams.len()),
        info: vec![],
    }
}

fn criterion_5() -> Outcome {
    let levels = [("coarse", QuadratureSpec::coarse()), ("medium", QuadratureSpec::medium()), ("fine", QuadratureSpec::fine())];
    let mut reports = Vec::new();
    let mut info = Vec::new();
    for (name, q) in levels {
        let t = Instant::now();
        let eng = CollisionEngine::new(KernelSpec::new(0.0, 0.5), q).expect("engine");
        let r = invariant_study(&eng).expect("invariants");
        info.push(format!("{name} ({}): worst relative {:.2e}, {:.0?}", eng.quad.label(), r.worst_relative(), t.elapsed()));
        reports.push(r);
    }
    let names = ["1", "v1", "v2", "v3", "|v|^2"];
    let mut pass = true;
    let mut parts = Vec::new();
    for i in 0..5 {
        let q: Vec<f64> = reports.iter().map(|r| r.q_moments[i] / r.q_scale).collect();
        let l: Vec<f64> = reports.iter().map(|r| r.l_norms[i] / r.l_scales[i]).collect();
        for (label, e) in [("Q", q), ("L", l)] {
            let decreasing = e.windows(2).all(|w| w[1] < w[0]);
            let floor = e.iter().all(|x| *x < ROUNDOFF_FLOOR);
            pass &= decreasing || floor;
            let orders: Vec<String> = e.windows(2).map(|w| format!("{:.1}", (w[0] / w[1]).log10())).collect();
            info.push(format!(
                "{label}[{}]: {:.1e} {:.1e} {:.1e}, decades gained {} {}",
                names[i],
                e[0],
                e[1],
                e[2],
                orders.join(" "),
                if decreasing { "" } else if floor { "(at roundoff floor)" } else { "(not decreasing)" }
            ));
        }
    }
    let fin = reports[2].worst_relative();
    pass &= fin <= INVARIANT_FINAL;
    parts.push(format!(
        "worst relative defect {:.2e} -> {:.2e} -> {:.2e}",
        reports[0].worst_relative(),
        reports[1].worst_relative(),
        fin
    ));
    Outcome { pass, detail: parts.join("; "), info }
}

fn criterion_6() -> Outcome {
    let fam = probe_family();
    let mut reps = Vec::new();
    let mut info = Vec::new();
    for (name, q) in [("coarse", QuadratureSpec::coarse()), ("medium", QuadratureSpec::medium())] {
        let t = Instant::now();
        let eng = CollisionEngine::new(KernelSpec::new(0.0, 0.5), q).expect("engine");
        let r = coercivity_probe(&fam, &eng, 10, 3).expect("probe");
        info.push(format!(
            "{name}: C1(rela)={:.4} C1(low)={:.4} min dissipation={:.4} excluded {:?}, {:.0?}",
            r.c1_rela,
            r.c1_low,
            r.min_dissipation,
            r.excluded,
            t.elapsed()
        ));
        reps.push(r);
    }
    let (a, b) = (&reps[0], &reps[1]);
    let ok_sign = reps.iter().all(|r| r.min_dissipation >= DISSIPATION_FLOOR);
    let ok_c1 = a.c1_rela > 0.0
        && a.c1_low > 0.0
        && b.c1_rela > 0.0
        && b.c1_low > 0.0
        && rel(a.c1_rela, b.c1_rela) <= C1_STABLE
        && rel(a.c1_low, b.c1_low) <= C1_STABLE;
    Outcome {
        pass: ok_sign && ok_c1,
        detail: format!(
            "C1(rela) {:.4} -> {:.4}, C1(low) {:.4} -> {:.4}, min <-Lh,h>/|h|^2 {:.4}",
            a.c1_rela,
            b.c1_rela,
            a.c1_low,
            b.c1_low,
            a.min_dissipation.min(b.min_dissipation)
        ),
        info,
    }
}

fn criterion_7() -> Outcome {
    let p = |e: &[u32]| AnalyticState::poly_times_sqrt_mu(3, Poly::monomial(e, 1.0));
    let k0 = [0i64, 0, 0];
    let cases = [
        (p(&[0, 0, 0]), [1.0, 0.0, 0.0, 0.0, 0.0]),
        (p(&[1, 0, 0]), [0.0, 1.0, 0.0, 0.0, 0.0]),
        (AnalyticState::poly_times_sqrt_mu(3, Poly::norm_sq(3)), [3.0, 0.0, 0.0, 0.0, 1.0]),
    ];
    let mut proj_err: f64 = 0.0;
    for (f, want) in &cases {
        let (m, rem) = project_p(f, &k0).expect("projection");
        let got = [m.a, m.b[0], m.b[1], m.b[2], m.c];
        for (g, w) in got.iter().zip(want) {
            proj_err = proj_err.max((g - C64::new(*w, 0.0)).norm());
        }
        if want[0] == 3.0 {
            proj_err = proj_err.max(rem.l2_v(&k0));
        }
    }
    let mk = |k: [i64; 3], pl: Poly, c: [f64; 3], w: f64| AnalyticState::term(&k, pl, &c, w);
    let init = mk([1, 0, 0], Poly::one(3), [0.3, 0.0, 0.0], 1.2)
        .add(&mk([-1, 0, 0], Poly::one(3), [0.3, 0.0, 0.0], 1.2))
        .add(&mk([0, 1, -1], Poly::var(3, 1).scale(C64::new(0.5, 0.2)), [0.0, 0.0, 0.2], 1.0))
        .add(&mk([0, -1, 1], Poly::var(3, 1).scale(C64::new(0.5, -0.2)), [0.0, 0.0, 0.2], 1.0));
    let grid = VelocityGrid::new(3, 24, 8.0).expect("grid");
    let f0 = sample_analytic(&init, &ModeSet::new(3, 1), &grid).expect("sample");
    let mut errs = Vec::new();
    for dt in [0.04, 0.02, 0.01] {
        let times: Vec<f64> = (0..3).map(|i| 0.3 + (i as f64 - 1.0) * dt).collect();
        let tr = transport_trajectory(&f0, &times).expect("trajectory");
        errs.push(fluid_residual(&tr, &times, 2, None).expect("residual").max_relative());
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let ok_order = orders.iter().all(|o| *o >= ORDER_RANGE.0 && *o <= ORDER_RANGE.1);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut k_zero_max: f64 = 0.0;
    for _ in 0..20 {
        let mut f = random_mode_state(&mut rng, 2);
        for t in &mut f.terms {
            t.k = vec![0, 0, 0];
        }
        for rho0 in [1.0, 2.0, 4.0, 8.0] {
            k_zero_max = k_zero_max.max(interaction_functional_state(&f, &k0, rho0).expect("K").norm());
        }
    }
    let probe = k_bound_probe(4.0, 50, 9).expect("K probe");
    Outcome {
        pass: proj_err <= PROJECTION && ok_order && k_zero_max == 0.0,
        detail: format!(
            "projection error {proj_err:.1e}; fluid residual {:.2e} {:.2e} {:.2e}, orders {:.3} {:.3}; max |K(k=0)| = {k_zero_max:e}",
            errs[0], errs[1], errs[2], orders[0], orders[1]
        ),
        info: vec![format!("max |K|/(|k| norms) over random modes at rho0=4: {probe:.3}")],
    }
}

fn criterion_8() -> Outcome {
    let mut parts = Vec::new();
    let mut info = Vec::new();
    let mut pass = true;
    let lat = check_binomial_lattice(8, 4);
    pass &= lat.passed();
    parts.push(format!("binomial lattice violations {}", lat.violations));
    for s in [0.25, 0.5, 0.75] {
        let r = check_interpolation(s, 16);
        pass &= r.report.passed();
        parts.push(format!("interpolation s={s} violations {}", r.report.violations));
    }
    let pair = SplitPair { p1: |t| 0.5 * t * t, q1: |_| 0.0, p2: |_| 0.0, q2: |t| t };
    let sp = check_split_lemma(&pair, 8, &[0.25, 0.5, 1.0, 2.0], 4, 0.0);
    pass &= sp.passed();
    parts.push(format!("split lemma violations {}", sp.violations));
    let mut lam_viol = 0;
    let mut max_lam: f64 = 0.0;
    for s in [0.25, 0.5, 0.75] {
        for (dim, k_max) in [(1, 12), (2, 6), (3, 3)] {
            let r = ScanRanges { dim, k_max, n_radial: 200, n_dirs: 4, seed: 3 };
            let a = symbol_bound_scan(s, &r).expect("scan");
            let b = symbol_bound_scan(s, &r.doubled()).expect("scan");
            pass &= a.plateau_violations == 0 && b.plateau_violations == 0 && a.admissible_c.is_finite();
            lam_viol += a.lambda_violations;
            max_lam = max_lam.max(a.max_abs_lambda);
            info.push(format!(
                "s={s} d={dim}: admissible C {:.3} (doubled {:.3}), plateau violations {}",
                a.admissible_c, b.admissible_c, a.plateau_violations
            ));
        }
    }
    parts.push(format!("symbol scan plateau violations 0: {pass}"));
    parts.push(format!("|lambda| > 1 at {lam_viol} samples, max |lambda| = {max_lam:.4}"));
    info.push(format!("sup_r r chi(r) = {:.4}", chi_moment_sup()));
    Outcome { pass: pass && lam_viol == 0, detail: parts.join("; "), info }
}

/// Relative ℓ² error of the solver spectrum against the exact one over all (k, η).
fn strang_error(s: f64, dt: f64, init: &AnalyticState, grid: &VelocityGrid, modes: &ModeSet, t: f64) -> f64 {
    let sv = Ffp1Solver::new(FfpConfig::new(s, 0.0, dt), modes.clone(), grid.clone()).expect("solver");
    let tr = run_ffp1(&sv, init, &[t], 0).expect("run");
    let f = &tr.snapshots[0];
    let deta = std::f64::consts::PI / grid.v_max;
    let (mut num, mut den) = (0.0, 0.0);
    for mi in 0..modes.len() {
        let k = modes.k(mi);
        let kf = k[0] as f64;
        let sp = column_spectrum(f.column(mi), grid);
        for (idx, z) in sp.iter().enumerate() {
            let eta = grid.freq_indices(idx)[0] as f64 * deta;
            let ex = init.spectrum(&k, &[eta + t * kf]) * (-exponent_integral(t, &[kf], &[eta], s)).exp();
            num += (z - ex).norm_sqr();
            den += ex.norm_sqr();
        }
    }
    (num / den).sqrt()
}

fn criterion_9() -> Outcome {
    let grid = VelocityGrid::new(1, 8192, std::f64::consts::PI / 0.00625).expect("grid");
    let modes = ModeSet::new(1, 4);
    let init = weighted_gaussian_packet(4, |k| (-0.5 * (k * k) as f64).exp())
        .add(&AnalyticState::term(&[1], Poly::var(1, 0), &[0.3], 0.9));
    let dts = [0.1, 0.05, 0.025, 0.0125];
    let mut pass = true;
    let mut detail = String::new();
    let mut info = Vec::new();
    for s in [0.75, 0.5, 0.25] {
        let errs: Vec<f64> = dts.iter().map(|&dt| strang_error(s, dt, &init, &grid, &modes, 1.0)).collect();
        let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        let line = format!(
            "s={s}: errors {}; orders {}",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" "),
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(" ")
        );
        if s == 0.75 {
            pass = orders.iter().all(|o| *o >= ORDER_RANGE.0 && *o <= ORDER_RANGE.1);
            detail = line;
        } else {
            info.push(format!("{line} (order reduction from the symbol |eta|^(2s) at eta = 0)"));
        }
    }
    Outcome { pass, detail, info }
}

fn radius_series(snapshots: &[KvField], modes: &ModeSet, k_max: i64, tau: f64) -> Vec<f64> {
    snapshots
        .iter()
        .map(|f| {
            let smp: Vec<(f64, f64)> = (1..=k_max).map(|k| (k as f64, f.l2_v(modes.index(&[k]).unwrap()))).collect();
            radius_estimate(&smp, tau).expect("radius").radius
        })
        .collect()
}

fn criterion_10() -> Outcome {
    let s = 0.5;
    let k_max = 24;
    let tau = 1.0 / (2.0 * s);
    let ts: Vec<f64> = (0..9).map(|i| 0.1 * 10f64.powf(i as f64 / 8.0)).collect();
    let init = flat_gaussian_packet(k_max);
    let modes = ModeSet::new(1, k_max);
    let grid = VelocityGrid::new(1, 256, 16.0).expect("grid");
    let exact: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let smp: Vec<(f64, f64)> =
                (1..=k_max).map(|k| (k as f64, weighted_mode_norm(&init, s, t, &[k], &[0], &[0]))).collect();
            radius_estimate(&smp, tau).expect("radius").radius
        })
        .collect();
    let mut fits = Vec::new();
    for gamma in [0.0, 1.0] {
        let probe = Ffp1Solver::new(FfpConfig::new(s, gamma, 1.0), modes.clone(), grid.clone()).expect("solver");
        let lim = probe.stability_limit();
        let dt = if lim.is_finite() { 0.5 * lim } else { 2e-3 };
        let sv = Ffp1Solver::new(FfpConfig::new(s, gamma, dt), modes.clone(), grid.clone()).expect("solver");
        let tr = run_ffp1(&sv, &init, &ts, 0).expect("run");
        let r = radius_series(&tr.snapshots, &modes, k_max, tau);
        fits.push((gamma, dt, lim, scaling_exponent(&ts, &r, 200, 7).expect("slope")));
    }
    let ex = scaling_exponent(&ts, &exact, 200, 7).expect("slope");
    let pairs = [
        ("s", s.to_string()),
        ("gamma", "1".to_string()),
        ("k_max", k_max.to_string()),
        ("n_v", grid.n.to_string()),
        ("v_max", grid.v_max.to_string()),
        ("dt", fits[1].1.to_string()),
        ("stability_limit", fits[1].2.to_string()),
        ("t_window", format!("{}..{}", ts[0], ts[ts.len() - 1])),
        ("n_boot", "200".to_string()),
        ("seed", "7".to_string()),
    ];
    let complete = pairs.iter().all(|(_, v)| !v.is_empty() && !v.contains("NaN") && !v.contains("inf"));
    let g1 = &fits[1].3;
    let target = (1.0 + 2.0 * s) / (2.0 * s);
    let ci_ok = g1.ci.0.is_finite() && g1.ci.1.is_finite() && g1.ci.0 <= g1.slope && g1.slope <= g1.ci.1;
    Outcome {
        pass: ci_ok && complete,
        detail: format!(
            "gamma=1 slope {:.3}, 95% CI ({:.3}, {:.3}), conjectured {target:.3} [{}]",
            g1.slope,
            g1.ci.0,
            g1.ci.1,
            if g1.ci.0 <= target && target <= g1.ci.1 { "inside CI" } else { "outside CI" }
        ),
        info: vec![
            format!("gamma=0 control on the same grid: slope {:.3}, exact {:.3}", fits[0].3.slope, ex.slope),
            format!("manifest: {}", pairs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")),
        ],
    }
}

fn cross_check() -> String {
    // Absorption needs c0 < C1/C: C1 from the coercivity ratio, C from the symbol scan.
    let eng = CollisionEngine::new(KernelSpec::new(0.0, 0.5), QuadratureSpec::coarse()).expect("engine");
    let c1 = coercivity_probe(&probe_family(), &eng, 10, 3).expect("probe").c1_rela;
    let h = poly_sqrt_mu(Poly::monomial(&[1, 1, 0], 1.0));
    let d = dissipation_matrix(&[&h], &eng).expect("dissipation")[0][0] / h.l2_v(&[0]).powi(2);
    let (b, _) = adaptive_gk(|t: f64| t.powf(-2.0) * t.sin().powi(2), 0.0, std::f64::consts::FRAC_PI_2, &[], 1e-14, 0.0);
    let c = symbol_bound_scan(0.5, &ScanRanges { dim: 3, k_max: 3, n_radial: 200, n_dirs: 4, seed: 3 })
        .expect("scan")
        .admissible_c;
    let c0 = 0.1;
    format!(
        "s=1/2: C1 = {c1:.4}, C = {c:.3}, largest admissible c0 = C1/C = {:.4}; c0 = {c0} gives C1 - C c0 = {:.4}; \
         <-Lh,h>/|h|^2 for v1v2 sqrt(mu) = {d:.6} (closed form {:.6})",
        c1 / c,
        c1 - c * c0,
        1.5 * std::f64::consts::PI * b
    )
}

fn main() {
    let criteria: Vec<(usize, &str, fn() -> Outcome)> = vec![
        (1, "Gevrey index recovery", criterion_1),
        (2, "radius scaling exponents", criterion_2),
        (3, "bracket bounds", criterion_3),
        (4, "commutator identities", criterion_4),
        (5, "collision invariants and null space", criterion_5),
        (6, "coercivity sign and Sobolev lower bound", criterion_6),
        (7, "macro-micro", criterion_7),
        (8, "inequality suites", criterion_8),
        (9, "gamma=0 solver vs exact", criterion_9),
        (10, "exploratory gamma=1 radius slope", criterion_10),
    ];
    let filter: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut unexpected = Vec::new();
    for (n, name, run) in criteria {
        if filter.map_or(false, |f| f != n) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {tag}: {name}: {} ({:.1?})", o.detail, t.elapsed());
        for line in &o.info {
            println!("    {line}");
        }
        match EXPECTED_FAIL.iter().find(|(m, _)| *m == n) {
            Some((_, why)) if !o.pass => println!("    expected failure: {why}"),
            Some(_) => unexpected.push(format!("criterion {n} passed but is listed as an expected failure")),
            None if !o.pass => unexpected.push(format!("criterion {n} failed")),
            None => {}
        }
    }
    if filter.is_none() {
        println!("cross-check: {}", cross_check());
    }
    if unexpected.is_empty() {
        println!("acceptance: no unexpected outcomes");
    } else {
        for u in &unexpected {
            println!("acceptance: {u}");
        }
        std::process::exit(1);
    }
}
