use proptest::prelude::*;

use dampwave::data::{liouville_backward, liouville_forward, make_bump_pair, BumpKind, DataMode};
use dampwave::duhamel::{diamond_march, interpolation_bound_check, DEFAULT_THRESHOLD};
use dampwave::functional::slicing::{a_j, b_closed, b_recursive, log_d_sequence};
use dampwave::functional::{
    compute_f, kato_lifespan_bound, kato_m, KatoParams, OdeSurrogate, Rk45Options,
};
use dampwave::harness::records::records_from_csv;
use dampwave::harness::{
    fit_exponent, BlowupTime, ExperimentConfig, FitModel, LifespanRecord, RunStatus,
};
use dampwave::lattice::CharacteristicGrid;
use dampwave::scaling::{
    classify_regime, fujita_exponent, gamma_dim, mu_zero, solve_a, solve_b, strauss_exponent_dim,
    DampingRegime, ProblemParams, StraussExponent,
};

fn ln_t(p: f64, c2: f64, eps: f64) -> f64 {
    OdeSurrogate::new(p, 2.0, 2f64.powf(1.0 - p), c2, 32.0 / 35.0)
        .unwrap()
        .ln_lifespan(eps, &Rk45Options::default())
        .unwrap()
        .expect("surrogate blows up")
}

fn record(eps: f64, ln_t: f64) -> LifespanRecord {
    LifespanRecord {
        eps,
        p: 1.5,
        solver: "ode".into(),
        h: 0.0,
        t_blowup: Some(BlowupTime::from_ln(ln_t)),
        status: RunStatus::Resolved,
        walltime: 0.0,
    }
}

proptest! {
    #[test]
    fn strauss_root_of_gamma(dim in 1.01f64..20.0) {
        match strauss_exponent_dim(dim) {
            StraussExponent::Finite(ps) => {
                prop_assert!(ps > 1.0);
                prop_assert!(gamma_dim(ps, dim).abs() < 1e-9 * (1.0 + ps * ps * dim));
            }
            StraussExponent::Unbounded => prop_assert!(false),
        }
    }

    #[test]
    fn damping_threshold_is_mu_zero(n in 1u32..10, mu in 0.0f64..10.0) {
        let params = ProblemParams::new(1.5, n, mu, 2.0, 1.0).unwrap();
        let expect = if mu >= mu_zero(n) { DampingRegime::HeatLike } else { DampingRegime::WaveLike };
        prop_assert_eq!(classify_regime(&params), expect);
    }

    #[test]
    fn wave_like_iff_fujita_below_strauss(n in 1u32..10, mu in 0.01f64..10.0) {
        prop_assume!((mu - mu_zero(n)).abs() > 1e-6);
        let pf = fujita_exponent(n);
        let wave = strauss_exponent_dim(f64::from(n) + mu).exceeds(pf);
        prop_assert_eq!(mu < mu_zero(n), wave);
    }

    #[test]
    fn log_scale_roots(log_eps in -8.0f64..3.0) {
        let eps = 10f64.powf(log_eps);
        let b = solve_b(eps).unwrap();
        let a = solve_a(eps).unwrap();
        prop_assert!((eps * eps * b * b.ln_1p() - 1.0).abs() <= 1e-12);
        prop_assert!((eps * eps * a * a * a.ln_1p() - 1.0).abs() <= 1e-12);
        prop_assert!(solve_b(0.9 * eps).unwrap() > b);
    }

    #[test]
    fn liouville_round_trip(v in -1e6f64..1e6, t in 0.0f64..1e3, mu in 0.0f64..6.0) {
        let back = liouville_backward(liouville_forward(v, t, mu), t, mu);
        prop_assert!((back - v).abs() <= 1e-12 * v.abs().max(1.0));
    }

    #[test]
    fn interpolation_holds(theta in 0.0f64..=1.0, k in 1.001f64..50.0, beta_frac in -1.0f64..1.0, alpha in 0.0f64..1e5) {
        let beta = if beta_frac < 0.0 { beta_frac * k.min(alpha) } else { beta_frac * 1e5 };
        prop_assume!(alpha + beta >= 0.0);
        prop_assert!(interpolation_bound_check(theta, alpha, beta, k).unwrap());
    }

    #[test]
    fn slicing_closed_form(j in 0u32..=40) {
        prop_assert_eq!(b_closed(j), b_recursive(j));
        prop_assert!(a_j(j) < a_j(j + 1));
    }

    #[test]
    fn slicing_corrected_bound(log_d0 in -40.0f64..5.0) {
        let s = 13.5f64;
        for (j, l) in log_d_sequence(log_d0, 30).into_iter().enumerate().skip(1) {
            let bound = 3f64.powi(j as i32 - 1) * (3.0 * log_d0 - s * 3f64.ln());
            prop_assert!(l >= bound - 1e-12 * l.abs().max(1.0), "j={} {} < {}", j, l, bound);
        }
    }

    #[test]
    fn kato_bound_scales_with_t1(p in 1.1f64..2.9, t0 in 0.1f64..100.0) {
        let kp = KatoParams { p, a: p, q: 2.0 * (p - 1.0), big_a: 1.0, big_b: 1.0, big_t0: 1.0, t0, k: 2.0 };
        let m = kato_m(p, p, 2.0 * (p - 1.0));
        let bound = kato_lifespan_bound(&kp).unwrap();
        prop_assert!((bound - 2f64.powf(2.0 / m) * kp.t1()).abs() <= 1e-12 * bound);
        prop_assert!(bound >= t0);
    }

    #[test]
    fn power_fit_recovers_exponent(e in 0.1f64..8.0, c in -3.0f64..3.0) {
        let recs: Vec<_> = [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|&eps: &f64| record(eps, c - e * eps.ln())).collect();
        let fit = fit_exponent(&recs, FitModel::Power).unwrap();
        prop_assert!((fit.exponent - e).abs() < 1e-9);
        prop_assert!((fit.intercept - c).abs() < 1e-8);
    }

    #[test]
    fn records_csv_round_trip(eps in 1e-6f64..10.0, ln in -5.0f64..5000.0, h in 0.0f64..1.0, w in 0.0f64..100.0) {
        let rec = LifespanRecord { h, walltime: w, ..record(eps, ln) };
        let back = records_from_csv(&format!("eps,p,solver,h,t_blowup,status,walltime\n{}\n", rec.to_csv_row())).unwrap();
        prop_assert_eq!(back, vec![rec]);
    }

    #[test]
    fn config_round_trip(p in 1.01f64..3.0, k in 1.1f64..8.0, seed in any::<u64>(), t_max in 1.0f64..1e4) {
        let cfg = ExperimentConfig { p, k, seed, t_max, ..Default::default() };
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ode_lifespan_decreases_in_eps(p in 1.2f64..2.9, eps in 1e-3f64..0.5) {
        prop_assert!(ln_t(p, 0.1, 1.5 * eps) < ln_t(p, 0.1, eps));
    }

    #[test]
    fn ode_lifespan_decreases_in_c2(p in 1.2f64..2.9, c2 in 0.01f64..1.0) {
        prop_assert!(ln_t(p, 1.5 * c2, 0.05) < ln_t(p, c2, 0.05));
    }

    #[test]
    fn functional_monotone_convex(p in 1.2f64..3.0, eps in 0.0f64..0.6) {
        let prof = make_bump_pair(BumpKind::PolyBump, 2.0, DataMode::Thm22).unwrap();
        let params = ProblemParams::damped_1d(p, 2.0, eps).unwrap();
        let g = CharacteristicGrid::covering(2.0, 8, 8.0).unwrap();
        let (u, st) = diamond_march(&prof, &params, &g, DEFAULT_THRESHOLD).unwrap();
        let tr = compute_f(&u, &params, st).unwrap();
        prop_assert!(tr.monotone_convex());
        // F'' is a second difference of F, so round-off sets a floor of eps_mach F / h^2.
        let max_f = tr.f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let max_rhs = tr.rhs.iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
        let floor = f64::EPSILON * max_f / (g.h() * g.h() * max_rhs);
        prop_assert!(tr.identity_residual() < 1e-8 + 100.0 * floor);
    }
}
