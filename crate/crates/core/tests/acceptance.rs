//! Acceptance criteria. Each test prints one `ACn PASS|FAIL` line to stdout,
//! outside the test harness capture, and then asserts.

use std::io::Write as _;
use std::time::Instant;

use dampwave::data::{liouville_forward, make_bump_pair, BumpKind, DataMode, DataProfile};
use dampwave::duhamel::{
    confirm_blowup, diamond_march, fuzz_interpolation, picard_solve, verify_apriori, AprioriKind,
    AprioriOptions, DuhamelOperator, DEFAULT_THRESHOLD,
};
use dampwave::fd::{compare_with_lattice, solve_ivp1, solve_ivp2, FdOptions, UniformGrid};
use dampwave::functional::slicing::{b_closed, b_recursive, series_s, series_s_partial};
use dampwave::functional::{
    calibrate_cascade, compute_f, holder_lower_bound_check, kato_lifespan_bound, kato_params_for,
    pointwise_bound_check, slicing_cascade, INEQUALITY_SLACK,
};
use dampwave::harness::{compare_with_theory, fit_exponent, run_sweep, ExperimentConfig, FitModel};
use dampwave::lattice::CharacteristicGrid;
use dampwave::numerics::fit_line;
use dampwave::scaling::{
    fujita_exponent, gamma, mu_zero, predicted_lifespan, solve_b, strauss_exponent, ProblemParams,
    Reference, StraussExponent,
};

struct Verdict {
    id: u32,
    name: &'static str,
    start: Instant,
    budget_s: f64,
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Verdict {
    fn new(id: u32, name: &'static str, budget_s: f64) -> Self {
        Self {
            id,
            name,
            start: Instant::now(),
            budget_s,
            failed: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, label: impl Into<String>, ok: bool) {
        let label = label.into();
        if !ok {
            self.failed.push(label.clone());
        }
        self.notes
            .push(format!("{label}{}", if ok { "" } else { " [FAILED]" }));
    }

    fn finish(mut self) {
        let secs = self.start.elapsed().as_secs_f64();
        self.check(
            format!("runtime {secs:.2}s < {}s", self.budget_s),
            secs < self.budget_s,
        );
        let pass = self.failed.is_empty();
        let line = format!(
            "AC{} {} {}: {}",
            self.id,
            if pass { "PASS" } else { "FAIL" },
            self.name,
            self.notes.join("; ")
        );
        let _ = writeln!(std::io::stdout().lock(), "{line}");
        assert!(pass, "{line}");
    }
}

fn thm22() -> DataProfile {
    make_bump_pair(BumpKind::PolyBump, 2.0, DataMode::Thm22).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn ac01_exponent_algebra() {
    let mut v = Verdict::new(1, "exponent algebra", 1.0);
    let worst = (2..=8)
        .map(|n| match strauss_exponent(n) {
            StraussExponent::Finite(ps) => gamma(ps, n).abs(),
            StraussExponent::Unbounded => f64::INFINITY,
        })
        .fold(0.0f64, f64::max);
    v.check(
        format!("max |gamma(p_S(n), n)| = {worst:.1e} for n = 2..8"),
        worst <= 1e-10,
    );
    v.check("p_F(1) = 3", fujita_exponent(1) == 3.0);
    v.check("mu_0(1) = 4/3", mu_zero(1) == 4.0 / 3.0);
    v.check("mu_0(2) = 2", mu_zero(2) == 2.0);
    v.finish();
}

#[test]
fn ac02_log_scale_root() {
    let mut v = Verdict::new(2, "b(eps) solver", 1.0);
    let mut worst: f64 = 0.0;
    for i in 0..=220 {
        let eps = 10f64.powf(-8.0 + 11.0 * i as f64 / 220.0);
        let b = solve_b(eps).unwrap();
        worst = worst.max((eps * eps * b * b.ln_1p() - 1.0).abs());
    }
    v.check(
        format!("max residual {worst:.1e} on [1e-8, 1e3]"),
        worst <= 1e-12,
    );
    // Independent bisection on b log(1+b) = 1.
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * mid.ln_1p() < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b1 = solve_b(1.0).unwrap();
    v.check(
        format!("b(1) = {b1:.6}, oracle {lo:.6}"),
        (b1 - 1.2399).abs() <= 1e-3 && (b1 - lo).abs() < 1e-10,
    );
    v.finish();
}

#[test]
fn ac03_operator_oracles() {
    let mut v = Verdict::new(3, "operator L oracles", 30.0);
    let t_end = 5.0;
    let ns = [32usize, 64, 128, 256];
    let sup_rel_err = |op: &DuhamelOperator, n: usize, exact: &dyn Fn(f64) -> f64| {
        let g = CharacteristicGrid::covering(2.0, n, t_end).unwrap();
        let w = op.apply_fn(&g, |_, _| 1.0);
        let c = g.center();
        (1..g.nt())
            .map(|m| rel(w.get(c, m), exact(g.t(m))))
            .fold(0.0f64, f64::max)
    };

    let flat = |t: f64| 0.5 * t * t;
    let e = sup_rel_err(&DuhamelOperator::unweighted(), 256, &flat);
    v.check(
        format!("weight off: rel err {e:.1e} at N=256 (exact quadrature)"),
        e <= 1e-12,
    );

    let params = ProblemParams::damped_1d(2.0, 2.0, 1.0).unwrap();
    let op = DuhamelOperator::for_params(&params);
    let log_exact = |t: f64| (1.0 + t) * (1.0 + t).ln() - t;
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| sup_rel_err(&op, n, &log_exact))
        .collect();
    let xs: Vec<f64> = ns.iter().map(|&n| (2.0 / n as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let order = fit_line(&xs, &ys).unwrap().slope;
    v.check(
        format!("p=2: rel err {:.1e} at N=256", errs[3]),
        errs[3] <= 1e-3,
    );
    v.check(format!("p=2: order {order:.3}"), (order - 2.0).abs() <= 0.3);
    v.finish();
}

#[test]
fn ac04_cross_solver() {
    let mut v = Verdict::new(4, "cross-solver agreement", 120.0);
    let prof = thm22();
    let params = ProblemParams::damped_1d(2.0, 2.0, 0.01).unwrap();
    let t_end = 5.0;
    let lattice = CharacteristicGrid::covering(2.0, 256, t_end).unwrap();
    let (field, _) = diamond_march(&prof, &params, &lattice, DEFAULT_THRESHOLD).unwrap();
    let fd = UniformGrid::covering(2.0, 256, t_end).unwrap();
    let tr = solve_ivp2(&prof, &params, &fd, FdOptions::default()).unwrap();
    let worst = (1..=5)
        .map(|t| {
            compare_with_lattice(tr.level_at(t as f64).unwrap(), &fd, &field, t as f64).unwrap()
        })
        .fold(0.0f64, f64::max);
    v.check(
        format!("diamond vs fd ivp2 rel sup {worst:.1e} at t = 1..5"),
        worst <= 1e-3,
    );

    let round_trip = |n: usize| {
        let g = UniformGrid::covering(2.0, n, t_end).unwrap();
        let opts = FdOptions {
            record_every: 0,
            ..FdOptions::default()
        };
        let v1 = solve_ivp1(&prof, &params, &g, opts).unwrap();
        let u2 = solve_ivp2(&prof, &params, &g, opts).unwrap();
        let (a, b) = (v1.level_at(t_end).unwrap(), u2.level_at(t_end).unwrap());
        let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        a.iter()
            .zip(b)
            .map(|(x, y)| (liouville_forward(*x, t_end, 2.0) - y).abs())
            .fold(0.0f64, f64::max)
            / scale
    };
    let ds: Vec<f64> = [32, 64, 128].into_iter().map(round_trip).collect();
    let order = (ds[1] / ds[2]).log2();
    v.check(
        format!(
            "Liouville round trip {:.1e} -> {:.1e} -> {:.1e}, order {order:.2}",
            ds[0], ds[1], ds[2]
        ),
        order >= 1.7 && ds.windows(2).all(|w| w[1] < w[0]),
    );
    v.finish();
}

#[test]
fn ac05_functional_identity() {
    let mut v = Verdict::new(5, "F identity and lower bounds", 120.0);
    let prof = thm22();
    let params = ProblemParams::damped_1d(2.0, 2.0, 0.5).unwrap();
    let mut holder_slack = Vec::new();
    let mut point_slack = Vec::new();
    for n in [16, 32, 64] {
        let g = CharacteristicGrid::covering(2.0, n, 8.0).unwrap();
        let (u, st) = diamond_march(&prof, &params, &g, DEFAULT_THRESHOLD).unwrap();
        let tr = compute_f(&u, &params, st).unwrap();
        let r = tr.identity_residual();
        v.check(format!("N={n}: identity residual {r:.1e}"), r <= 1e-2);
        let h = holder_lower_bound_check(&tr, INEQUALITY_SLACK);
        let p = pointwise_bound_check(&u, &prof, &params, INEQUALITY_SLACK).unwrap();
        v.check(
            format!(
                "N={n}: holder {} pts, pointwise {} pts, no violations",
                h.checked, p.checked
            ),
            h.passed() && p.passed() && h.checked > 0 && p.checked > 0,
        );
        holder_slack.push(h.needed_slack);
        point_slack.push(p.needed_slack);
    }
    let shrinking = |s: &[f64]| s.windows(2).all(|w| w[1] <= w[0]);
    v.check(
        format!("holder needed slack {holder_slack:?} non-increasing"),
        shrinking(&holder_slack),
    );
    v.check(
        format!("pointwise needed slack {point_slack:?} non-increasing"),
        shrinking(&point_slack),
    );
    v.finish();
}

#[test]
fn ac06_apriori_growth() {
    let mut v = Verdict::new(6, "a-priori growth rates", 300.0);
    let horizons: Vec<f64> = (0..12)
        .map(|i| 10.0 * 100f64.powf(i as f64 / 11.0))
        .collect();
    let opts = AprioriOptions::new(2.0).unwrap();
    for p in [1.5, 2.0, 2.5] {
        let params = ProblemParams::damped_1d(p, 2.0, 1.0).unwrap();
        let rep = verify_apriori(AprioriKind::Main33, &params, &horizons, &opts).unwrap();
        let slope = rep.fit.map_or(f64::NAN, |f| f.slope);
        let dev = rep.relative_deviation.unwrap_or(f64::INFINITY);
        v.check(
            format!(
                "p={p}: slope {slope:.4} vs {:.4} ({:.1}%)",
                rep.expected_exponent,
                100.0 * dev
            ),
            dev <= 0.15,
        );
    }
    v.finish();
}

#[test]
fn ac07_ode_scaling() {
    let mut v = Verdict::new(7, "ODE surrogate lifespan scaling", 60.0);
    let decades = vec![1e-1, 1e-2, 1e-3, 1e-4];
    let cases: [(f64, Vec<f64>, FitModel, f64); 4] = [
        (1.5, decades.clone(), FitModel::Power, 0.10),
        (2.5, decades, FitModel::Power, 0.10),
        (2.0, vec![1e-1, 5e-2, 2e-2, 1e-2], FitModel::BEps, 0.10),
        (
            3.0,
            vec![1.0, 0.9, 0.8, 0.7, 0.6, 0.5],
            FitModel::Exponential,
            0.15,
        ),
    ];
    for (p, eps, model, tol) in cases {
        let cfg = ExperimentConfig {
            p,
            eps,
            ..Default::default()
        };
        let recs = run_sweep(&cfg).unwrap();
        let fit = fit_exponent(&recs, model).unwrap();
        let pred = predicted_lifespan(&cfg.params().unwrap(), Reference::New1d).unwrap();
        let verdict = compare_with_theory(&fit, &pred, tol).unwrap();
        let what = match model {
            FitModel::BEps => format!("T/b spread {:.3}", verdict.ratio_spread.unwrap_or(f64::NAN)),
            _ => format!(
                "exponent {:.4} vs {:.4}",
                verdict.fitted,
                verdict.predicted.unwrap_or(f64::NAN)
            ),
        };
        v.check(format!("p={p} {model}: {what}"), verdict.pass);
    }
    v.finish();
}

#[test]
fn ac08_pde_blowup_vs_kato() {
    let mut v = Verdict::new(8, "direct PDE blow-up below the Kato bound", 600.0);
    let prof = thm22();
    let params = ProblemParams::damped_1d(1.5, 2.0, 1.0).unwrap();
    let reference = CharacteristicGrid::covering(2.0, 32, 200.0).unwrap();
    let (u, st) = diamond_march(&prof, &params, &reference, DEFAULT_THRESHOLD).unwrap();
    let c = calibrate_cascade(&compute_f(&u, &params, st).unwrap(), 1.0, 0.9).unwrap();
    v.check(format!("calibrated C = {c:.3}"), c > 0.0);
    let mut times = Vec::new();
    for eps in [1.0, 0.7, 0.5, 0.35] {
        let pp = params.with_eps(eps);
        let conf = confirm_blowup(&prof, &pp, 16, 400.0, DEFAULT_THRESHOLD).unwrap();
        let t_b = conf.coarse.blowup_time().unwrap_or(f64::NAN);
        let bound =
            kato_lifespan_bound(&kato_params_for(eps, &pp, c, prof.f_l1()).unwrap()).unwrap();
        v.check(
            format!(
                "eps={eps}: t_b {t_b} confirmed={} bound {bound:.2}",
                conf.confirmed
            ),
            conf.confirmed && bound >= 0.9 * t_b,
        );
        times.push(t_b);
    }
    v.check(
        "t_b strictly decreasing in eps",
        times.windows(2).all(|w| w[1] > w[0]),
    );
    v.finish();
}

#[test]
fn ac09_slicing() {
    let mut v = Verdict::new(9, "slicing cascade", 1.0);
    v.check(
        "b_j closed form == recursion for j <= 20",
        (0..=20).all(|j| b_closed(j) == b_recursive(j)),
    );
    let s = series_s();
    v.check(format!("S = {s}"), (s - 13.5).abs() <= 1e-12);
    let exact = num_rational::BigRational::from_integer(27.into())
        / num_rational::BigRational::from_integer(2.into());
    v.check(
        "partial sums increase to 27/2",
        series_s_partial(40) < exact && series_s_partial(41) > series_s_partial(40),
    );
    let crit = ProblemParams::damped_1d(3.0, 2.0, 1.0).unwrap();
    for eps in [1.0, 0.7, 0.5] {
        let rep = slicing_cascade(eps, 1.0, &crit, 30).unwrap();
        v.check(
            format!(
                "D0={:.3}: log D_j >= 3^(j-1)(log D0 - S log 3), j <= 30",
                rep.d0
            ),
            rep.printed_bound_holds,
        );
    }
    for eps in [0.3, 1e-2, 1e-4] {
        let rep = slicing_cascade(eps, 1.0, &crit, 30).unwrap();
        v.check(
            format!(
                "D0={:.1e}: log D_j >= 3^(j-1)(3 log D0 - S log 3), j <= 30",
                rep.d0
            ),
            rep.corrected_bound_holds,
        );
    }
    v.finish();
}

#[test]
fn ac10_picard_contraction() {
    let mut v = Verdict::new(10, "Picard contraction", 120.0);
    let prof = thm22();
    let params = ProblemParams::damped_1d(2.0, 2.0, 0.2).unwrap();
    let g = CharacteristicGrid::covering(2.0, 256, 5.0).unwrap();
    let (u, rep) = picard_solve(&prof, &params, &g, 1e-13, 40).unwrap();
    let max5 = rep.max_ratio(5).unwrap_or(f64::INFINITY);
    v.check(
        format!("{} ratios, max of first 5 = {max5:.3}", rep.ratios.len()),
        max5 < 1.0,
    );
    v.check(
        "converged without growth",
        rep.converged && !rep.non_contraction,
    );
    let (m, _) = diamond_march(&prof, &params, &g, DEFAULT_THRESHOLD).unwrap();
    let d = u.relative_sup_diff(&m).unwrap();
    v.check(format!("fixed point vs march {d:.1e}"), d <= 1e-3);
    v.finish();
}

#[test]
fn ac11_interpolation_fuzz() {
    let mut v = Verdict::new(11, "interpolation inequality fuzz", 5.0);
    let rep = fuzz_interpolation(100_000, 0);
    v.check(
        format!(
            "{} samples, {} violations, min margin {:.4}",
            rep.samples, rep.violations, rep.min_margin
        ),
        rep.samples == 100_000 && rep.violations == 0,
    );
    v.finish();
}
