//! Kato-lemma bookkeeping: the growth exponent `M`, the constant `C_*`, the
//! lower-bound cascade for `F` and the resulting lifespan upper bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::ode::{integrate, Rk45Options, StopReason};
use crate::functional::trace::FunctionalTrace;
use crate::numerics::bisect;
use crate::scaling::{PRegime, ProblemParams};

/// Hypotheses `F >= A t^a` for `t >= T0` and `F'' >= B (t+k)^{-q} |F|^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KatoParams {
    pub p: f64,
    pub a: f64,
    pub q: f64,
    pub big_a: f64,
    pub big_b: f64,
    pub big_t0: f64,
    pub t0: f64,
    pub k: f64,
}

impl KatoParams {
    pub fn m(&self) -> f64 {
        kato_m(self.p, self.a, self.q)
    }

    pub fn t1(&self) -> f64 {
        self.big_t0.max(self.t0).max(self.k)
    }
}

/// `M = (p-1) a / 2 - q / 2 + 1`.
pub fn kato_m(p: f64, a: f64, q: f64) -> f64 {
    (p - 1.0) * a / 2.0 - q / 2.0 + 1.0
}

/// `2^{2/M} T1`.
pub fn kato_lifespan_bound(kp: &KatoParams) -> Result<f64> {
    let m = kp.m();
    if !(m > 0.0) {
        return Err(Error::Precondition(format!(
            "Kato bound needs M > 0, got M = {m} (use the slicing cascade)"
        )));
    }
    Ok(2f64.powf(2.0 / m) * kp.t1())
}

/// Growth exponent `a` of the cascade lower bound.
pub fn cascade_exponent(p: f64) -> Result<f64> {
    Ok(match PRegime::of(p)? {
        PRegime::SubcriticalLow => 3.0 - p,
        _ => 1.0,
    })
}

/// Regime shape of the lower bound for `F` at `t >= 4k`.
pub fn cascade_shape(p: f64, k: f64, t: f64) -> Result<f64> {
    if !(t >= 4.0 * k) {
        return Err(Error::Precondition(format!(
            "cascade bound needs t >= 4k = {}, got {t}",
            4.0 * k
        )));
    }
    Ok(match PRegime::of(p)? {
        PRegime::SubcriticalLow => t.powf(3.0 - p),
        PRegime::PEqual2 => t * (t / (2.0 * k)).ln(),
        _ => t,
    })
}

/// `C eps^p shape(t)`.
pub fn lower_bound_cascade(eps: f64, params: &ProblemParams, c: f64, t: f64) -> Result<f64> {
    Ok(c * eps.powf(params.p) * cascade_shape(params.p, params.k, t)?)
}

/// Solves `C eps^p shape(t0) = 2 ||f||_1 eps` using the unrestricted shape.
pub fn t0_doubling(eps: f64, params: &ProblemParams, c: f64, f_l1: f64) -> Result<f64> {
    let p = params.p;
    if !(eps > 0.0) || !(c > 0.0) || !(f_l1 > 0.0) {
        return Err(Error::InvalidParameter(
            "t0 needs positive eps, C and ||f||_1".into(),
        ));
    }
    let target = 2.0 * f_l1 * eps.powf(1.0 - p) / c;
    match PRegime::of(p)? {
        PRegime::SubcriticalLow => Ok(target.powf(1.0 / (3.0 - p))),
        PRegime::PEqual2 => {
            let two_k = 2.0 * params.k;
            let g = |t: f64| t * (t / two_k).ln() - target;
            let mut hi = two_k * std::f64::consts::E;
            while g(hi) < 0.0 {
                hi *= 2.0;
            }
            bisect(g, two_k, hi, 1e-12 * hi, 400)
        }
        PRegime::SubcriticalHigh => Ok(target),
        PRegime::Critical => Err(Error::Unsupported(format!(
            "t0 doubling is defined for 1 < p < 3, got p = {p}"
        ))),
    }
}

/// Smallest `lambda` for which `G'' = lambda 2^{-q} s^{-q} |G|^p`, `G(1) = 1`,
/// `G'(1) = 0` blows up before `s = 2^{2/M}`.
pub fn lambda_star(p: f64, a: f64, q: f64) -> Result<f64> {
    let m = kato_m(p, a, q);
    if !(m > 0.0) {
        return Err(Error::Precondition(format!(
            "lambda_* needs M > 0, got {m}"
        )));
    }
    let s_end = 2f64.powf(2.0 / m);
    let blows = |lambda: f64| {
        let c = lambda * 2f64.powf(-q);
        let out = integrate(
            |s, y| [y[1], c * s.powf(-q) * y[0].abs().powf(p)],
            1.0,
            [1.0, 0.0],
            s_end,
            &Rk45Options {
                h_max: 0.05,
                ..Default::default()
            },
            |_, y| y[0] > 1e20,
        );
        !matches!(out.reason, StopReason::Reached)
    };
    let mut hi = 1.0;
    while !blows(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numerical("lambda_* bracket not found".into()));
        }
    }
    let mut lo = hi / 2.0;
    while blows(lo) {
        hi = lo;
        lo /= 2.0;
        if lo < 1e-12 {
            return Err(Error::Numerical("lambda_* bracket not found".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if blows(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `C_* = (lambda_* / B)^{1/(2M)}`, so that `T1 >= C_* A^{-(p-1)/(2M)}` forces blow-up before `2^{2/M} T1`.
pub fn c_star(p: f64, a: f64, q: f64, big_b: f64) -> Result<f64> {
    let m = kato_m(p, a, q);
    Ok((lambda_star(p, a, q)? / big_b).powf(1.0 / (2.0 * m)))
}

/// Smallest `F / (eps^p shape)` over rows with `4k <= t <= frac * t_end`.
pub fn calibrate_cascade(trace: &FunctionalTrace, eps: f64, frac: f64) -> Result<f64> {
    let t_end = trace
        .status
        .blowup_time()
        .unwrap_or(*trace.times.last().unwrap_or(&0.0));
    let lo = 4.0 * trace.k;
    let mut best = f64::INFINITY;
    for (t, f) in trace.times.iter().zip(&trace.f) {
        if *t < lo || *t > frac * t_end {
            continue;
        }
        best = best.min(f / (eps.powf(trace.p) * cascade_shape(trace.p, trace.k, *t)?));
    }
    if !best.is_finite() || !(best > 0.0) {
        return Err(Error::InsufficientData(format!(
            "no rows in [4k, {frac} t_end] = [{lo}, {}] to calibrate the cascade",
            frac * t_end
        )));
    }
    Ok(best)
}

/// Kato hypotheses for `eps` from a frozen cascade constant `c`.
pub fn kato_params_for(eps: f64, params: &ProblemParams, c: f64, f_l1: f64) -> Result<KatoParams> {
    let p = params.p;
    let k = params.k;
    let q = 2.0 * (p - 1.0);
    let a = cascade_exponent(p)?;
    let mut big_a = c * eps.powf(p);
    if matches!(PRegime::of(p)?, PRegime::PEqual2) {
        // t log(t/2k) >= t log 2 on t >= 4k
        big_a *= 2f64.ln();
    }
    let big_b = 2f64.powf(-(p - 1.0));
    let m = kato_m(p, a, q);
    let big_t0 = if m > 0.0 {
        (4.0 * k).max(c_star(p, a, q, big_b)? * big_a.powf(-(p - 1.0) / (2.0 * m)))
    } else {
        4.0 * k
    };
    Ok(KatoParams {
        p,
        a,
        q,
        big_a,
        big_b,
        big_t0,
        t0: t0_doubling(eps, params, c, f_l1)?,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_exponent_per_case() {
        assert!((kato_m(1.5, 1.5, 1.0) - 0.875).abs() < 1e-15);
        assert!((kato_m(2.5, 1.0, 3.0) - 0.25).abs() < 1e-15);
        assert_eq!(kato_m(3.0, 1.0, 4.0), 0.0);
    }

    #[test]
    fn critical_case_rejected() {
        let kp = KatoParams {
            p: 3.0,
            a: 1.0,
            q: 4.0,
            big_a: 1.0,
            big_b: 0.25,
            big_t0: 8.0,
            t0: 1.0,
            k: 2.0,
        };
        assert!(kato_lifespan_bound(&kp).is_err());
        let ok = KatoParams {
            p: 1.5,
            a: 1.5,
            q: 1.0,
            ..kp
        };
        let b = kato_lifespan_bound(&ok).unwrap();
        assert!((b - 2f64.powf(2.0 / 0.875) * 8.0).abs() < 1e-12);
    }

    #[test]
    fn cascade_shapes() {
        assert!((cascade_shape(1.5, 2.0, 16.0).unwrap() - 64.0).abs() < 1e-12);
        assert!((cascade_shape(2.0, 2.0, 8.0).unwrap() - 8.0 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(cascade_shape(2.5, 2.0, 9.0).unwrap(), 9.0);
        assert!(cascade_shape(1.5, 2.0, 7.9).is_err());
    }

    #[test]
    fn t0_scales_with_eps() {
        let c = 0.3;
        for (p, e) in [(1.5, 1.0 / 3.0), (2.5, 1.5)] {
            let params = ProblemParams::damped_1d(p, 2.0, 1.0).unwrap();
            let a = t0_doubling(0.1, &params, c, 1.0).unwrap();
            let b = t0_doubling(0.01, &params, c, 1.0).unwrap();
            assert!(((b / a).log10() - e).abs() < 1e-12);
        }
        let params = ProblemParams::damped_1d(2.0, 2.0, 1.0).unwrap();
        let eps = 0.01;
        let t = t0_doubling(eps, &params, c, 1.0).unwrap();
        assert!((c * eps * t * (t / 4.0).ln() - 2.0).abs() < 1e-8);
        let crit = ProblemParams::damped_1d(3.0, 2.0, 1.0).unwrap();
        assert!(t0_doubling(0.1, &crit, c, 1.0).is_err());
    }

    #[test]
    fn lambda_star_brackets_blowup() {
        // G'' = c G^2 from G(1)=1, G'(1)=0 blows up after s - 1 = int_1^inf dG / sqrt(2c(G^3-1)/3).
        let l = lambda_star(2.0, 1.5, 0.0).unwrap();
        let m = kato_m(2.0, 1.5, 0.0);
        let span = 2f64.powf(2.0 / m) - 1.0;
        let c = l;
        let integral = crate::numerics::adaptive_simpson(
            &|u: f64| {
                // G = 1 + u^2 removes the endpoint singularity
                let g = 1.0 + u * u;
                2.0 * u / (2.0 * c * (g.powi(3) - 1.0) / 3.0).sqrt()
            },
            1e-4,
            1e4,
            1e-12,
        ) + 1e-4 * 2.0 / (2.0 * c).sqrt()
            + 1e-4 * 2.0 / (2.0 * c / 3.0).sqrt();
        assert!((integral / span - 1.0).abs() < 1e-3, "{integral} vs {span}");
    }
}
