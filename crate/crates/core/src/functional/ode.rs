//! Adaptive Dormand-Prince 5(4) integrator for two-component systems and the
//! ODE surrogate for the functional `F`.

use serde::{Deserialize, Serialize};

use crate::data::DataProfile;
use crate::error::{Error, Result};
use crate::harness::records::{BlowupTime, LifespanRecord, RunStatus};
use crate::scaling::ProblemParams;

pub type State = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rk45Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Rk45Options {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 1e-3,
            h_min: 1e-14,
            h_max: 1.0,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Reached,
    Event,
    StepUnderflow,
    MaxSteps,
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rk45Outcome {
    pub t: f64,
    pub y: State,
    pub steps: usize,
    pub reason: StopReason,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Integrates `y' = rhs(t, y)` from `t0` towards `t_end`, stopping early when
/// `event(t, y)` returns true after an accepted step.
pub fn integrate<R, E>(
    rhs: R,
    t0: f64,
    y0: State,
    t_end: f64,
    opts: &Rk45Options,
    mut event: E,
) -> Rk45Outcome
where
    R: Fn(f64, &State) -> State,
    E: FnMut(f64, &State) -> bool,
{
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.h_init.min(t_end - t0).max(opts.h_min);
    let mut k1 = rhs(t, &y);
    let mut steps = 0;
    let outcome = |t, y, steps, reason| Rk45Outcome {
        t,
        y,
        steps,
        reason,
    };
    if event(t, &y) {
        return outcome(t, y, steps, StopReason::Event);
    }
    while t < t_end {
        if steps >= opts.max_steps {
            return outcome(t, y, steps, StopReason::MaxSteps);
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let k2 = rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = rhs(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = rhs(t + h, &y_new);
        let mut err: f64 = 0.0;
        for c in 0..2 {
            let e =
                h * (E1 * k1[c] + E3 * k3[c] + E4 * k4[c] + E5 * k5[c] + E6 * k6[c] + E7 * k7[c]);
            let sc = opts.atol + opts.rtol * y[c].abs().max(y_new[c].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() || !y_new.iter().all(|v| v.is_finite()) {
            if h <= opts.h_min {
                return outcome(t, y, steps, StopReason::NonFinite);
            }
            h = (0.1 * h).max(opts.h_min);
            continue;
        }
        if err <= 1.0 {
            t = if last { t_end } else { t + h };
            y = y_new;
            k1 = k7;
            steps += 1;
            if event(t, &y) {
                return outcome(t, y, steps, StopReason::Event);
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * fac).min(opts.h_max);
        } else {
            if h <= opts.h_min {
                return outcome(t, y, steps, StopReason::StepUnderflow);
            }
            h = (h * (0.9 * err.powf(-0.2)).max(0.1)).max(opts.h_min);
        }
    }
    outcome(t, y, steps, StopReason::Reached)
}

/// Blow-up is declared once `t^2 F''/F` exceeds this value.
pub const BLOWUP_INDICATOR: f64 = 1e12;

/// Largest `ln t` the surrogate integrates to before giving up.
pub const S_MAX: f64 = 1e7;

/// `F'' = c1 (t+k)^{-2(p-1)} |F|^p + c2 eps^p t^{1-p} 1_{t>=k}`, `F(0) = eps * f0`, `F'(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeSurrogate {
    pub p: f64,
    pub k: f64,
    pub c1: f64,
    pub c2: f64,
    /// `||f||_{L^1}`
    pub f0: f64,
}

impl OdeSurrogate {
    pub fn new(p: f64, k: f64, c1: f64, c2: f64, f0: f64) -> Result<Self> {
        if !(p > 1.0) || !(k > 0.0) || !(c1 > 0.0) || !(c2 > 0.0) || !(f0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ode surrogate needs p > 1 and positive k, c1, c2, f0 (p={p}, k={k}, c1={c1}, c2={c2}, f0={f0})"
            )));
        }
        Ok(Self { p, k, c1, c2, f0 })
    }

    /// `c1 = 2^{-(p-1)}`, `c2 = 2^{1-2p} int f^p`, `f0 = int f`.
    pub fn from_profile(params: &ProblemParams, profile: &DataProfile) -> Result<Self> {
        let p = params.p;
        Self::new(
            p,
            params.k,
            default_c1(p),
            2f64.powf(1.0 - 2.0 * p) * profile.f_power_moment(p),
            profile.f_l1(),
        )
    }

    fn q(&self) -> f64 {
        2.0 * (self.p - 1.0)
    }

    /// `ln T` of the blow-up time, or `None` when the integrator gave up.
    pub fn ln_lifespan(&self, eps: f64, opts: &Rk45Options) -> Result<Option<f64>> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive, got {eps}"
            )));
        }
        let (p, k, c1, q) = (self.p, self.k, self.c1, self.q());
        let indicator =
            |t: f64, f: f64| c1 * (t + k).powf(-q) * t.max(k).powi(2) * f.abs().powf(p - 1.0);
        let inner = integrate(
            |t, y| [y[1], c1 * (t + k).powf(-q) * y[0].abs().powf(p)],
            0.0,
            [eps * self.f0, 0.0],
            k,
            &Rk45Options {
                h_max: k / 8.0,
                ..*opts
            },
            |t, y| indicator(t, y[0]) >= BLOWUP_INDICATOR,
        );
        match inner.reason {
            StopReason::Event => return Ok(Some(inner.t.max(f64::MIN_POSITIVE).ln())),
            StopReason::Reached => {}
            _ => return Ok(None),
        }
        // Log time s = ln t with G = F/t and Q = F'; powers of t are taken in
        // log form so that ln T may exceed the f64 exponent range.
        let c2e = self.c2 * eps.powf(p);
        let ln_tk = move |s: f64| s + (k * (-s).exp()).ln_1p();
        let s0 = k.ln();
        let y0 = [inner.y[0] / k, inner.y[1]];
        let rhs = |s: f64, y: &State| {
            let nonlin = c1 * ((1.0 + p) * s - q * ln_tk(s)).exp() * y[0].abs().powf(p);
            [y[1] - y[0], nonlin + c2e * ((2.0 - p) * s).exp()]
        };
        let log_indicator =
            |s: f64, g: f64| c1.ln() + (1.0 + p) * s - q * ln_tk(s) + (p - 1.0) * g.abs().ln();
        let outer = integrate(
            rhs,
            s0,
            y0,
            S_MAX,
            &Rk45Options {
                h_init: 1e-3,
                h_max: 10.0,
                ..*opts
            },
            |s, y| log_indicator(s, y[0]) >= BLOWUP_INDICATOR.ln(),
        );
        Ok(match outer.reason {
            StopReason::Event => Some(outer.t),
            _ => None,
        })
    }
}

pub fn default_c1(p: f64) -> f64 {
    2f64.powf(-(p - 1.0))
}

/// Blow-up time of the ODE surrogate as a lifespan record (`h = 0`).
pub fn ode_comparison_lifespan(
    eps: f64,
    params: &ProblemParams,
    c1: f64,
    c2: f64,
    f0: f64,
    opts: &Rk45Options,
) -> Result<LifespanRecord> {
    let start = std::time::Instant::now();
    let sur = OdeSurrogate::new(params.p, params.k, c1, c2, f0)?;
    let ln_t = sur.ln_lifespan(eps, opts)?;
    let status = match ln_t {
        Some(_) => RunStatus::Resolved,
        None => RunStatus::Unresolved,
    };
    Ok(LifespanRecord {
        eps,
        p: params.p,
        solver: "ode".into(),
        h: 0.0,
        t_blowup: ln_t.map(BlowupTime::from_ln),
        status,
        walltime: start.elapsed().as_secs_f64(),
    })
}
