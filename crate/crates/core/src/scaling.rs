//! Critical exponents, weights, growth factors and lifespan predictions.
//!
//! Everything here is closed-form except the two root finders for the
//! logarithmic lifespan scales `b(eps)` and `a(eps)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::bisect;

/// Width of the band in which a floating point `p` is treated as exactly
/// equal to a regime boundary (`p = 2`, `p = 3`).
pub const P_BOUNDARY_TOL: f64 = 1e-12;

/// Physical and data parameters of one problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    /// Nonlinearity exponent, `p > 1`.
    pub p: f64,
    /// Space dimension.
    pub n: u32,
    /// Damping constant in `mu / (1 + t)`.
    pub mu: f64,
    /// Support radius of the data, `k > 1`.
    pub k: f64,
    /// Data amplitude.
    pub eps: f64,
}

impl ProblemParams {
    pub fn new(p: f64, n: u32, mu: f64, k: f64, eps: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("p must be > 1, got {p}")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter(
                "space dimension must be >= 1".into(),
            ));
        }
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mu must be >= 0, got {mu}"
            )));
        }
        if !(k > 1.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!("k must be > 1, got {k}")));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "eps must be >= 0, got {eps}"
            )));
        }
        Ok(Self { p, n, mu, k, eps })
    }

    /// One space dimension with `mu = 2`, the setting of the solvers.
    pub fn damped_1d(p: f64, k: f64, eps: f64) -> Result<Self> {
        Self::new(p, 1, 2.0, k, eps)
    }

    pub fn with_eps(self, eps: f64) -> Self {
        Self { eps, ..self }
    }

    /// Solvers handle `n = 1` with `mu` in `{0, 2}` only; for both the mass
    /// term of the transformed equation vanishes.
    pub fn require_solver_setting(&self) -> Result<()> {
        if self.n != 1 {
            return Err(Error::Unsupported(format!(
                "solvers are one dimensional, got n = {}",
                self.n
            )));
        }
        if self.mu != 0.0 && self.mu != 2.0 {
            return Err(Error::Unsupported(format!(
                "solvers support mu in {{0, 2}}, got {}",
                self.mu
            )));
        }
        Ok(())
    }

    /// Exponent of the time weight on the source of the transformed equation,
    /// `|u|^p / (1+t)^{mu (p-1)/2}`.
    pub fn source_decay(&self) -> f64 {
        self.mu * (self.p - 1.0) / 2.0
    }

    pub fn regime(&self) -> Result<PRegime> {
        PRegime::of(self.p)
    }
}

/// Position of `p` in the four-case lifespan table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PRegime {
    /// `1 < p < 2`
    SubcriticalLow,
    /// `p = 2`
    PEqual2,
    /// `2 < p < 3`
    SubcriticalHigh,
    /// `p = 3`
    Critical,
}

impl PRegime {
    pub fn of(p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::InvalidParameter(format!("p must be > 1, got {p}")));
        }
        if (p - 2.0).abs() <= P_BOUNDARY_TOL {
            Ok(PRegime::PEqual2)
        } else if (p - 3.0).abs() <= P_BOUNDARY_TOL {
            Ok(PRegime::Critical)
        } else if p < 2.0 {
            Ok(PRegime::SubcriticalLow)
        } else if p < 3.0 {
            Ok(PRegime::SubcriticalHigh)
        } else {
            Err(Error::InvalidParameter(format!(
                "p = {p} lies outside (1, 3]"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifespanForm {
    /// `T ~ C eps^{-exponent}`
    Power,
    /// `T ~ C b(eps)`
    BEps,
    /// `T ~ C a(eps)`, two dimensional undamped case only
    AEps,
    /// `T ~ exp(C eps^{-exponent})`
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Zero-moment data, one dimension, `mu = 2`.
    New1d,
    /// Heat-like expectation.
    Heat,
    /// Wave-like expectation in the shifted dimension `n + mu`.
    Wave,
    /// Undamped equation with nonvanishing total speed.
    Nondamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifespanPrediction {
    pub regime: Option<PRegime>,
    pub form: LifespanForm,
    pub exponent: f64,
    pub reference: Reference,
}

impl LifespanPrediction {
    /// Natural log of the predicted lifespan with every free constant set to 1.
    pub fn ln_shape(&self, eps: f64) -> Result<f64> {
        match self.form {
            LifespanForm::Power => Ok(-self.exponent * eps.ln()),
            LifespanForm::BEps => Ok(solve_b(eps)?.ln()),
            LifespanForm::AEps => Ok(solve_a(eps)?.ln()),
            LifespanForm::Exponential => Ok(eps.powf(-self.exponent)),
        }
    }
}

/// Damping classification of the conjectured critical exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingRegime {
    HeatLike,
    WaveLike,
}

/// Strauss exponent, unbounded in one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StraussExponent {
    Finite(f64),
    Unbounded,
}

impl StraussExponent {
    /// `self > p`, with the unbounded case larger than every finite `p`.
    pub fn exceeds(&self, p: f64) -> bool {
        match self {
            StraussExponent::Finite(v) => *v > p,
            StraussExponent::Unbounded => true,
        }
    }
}

/// `gamma(p, n) = 2 + (n+1) p - (n-1) p^2`.
pub fn gamma(p: f64, n: u32) -> f64 {
    gamma_dim(p, f64::from(n))
}

/// `gamma` in a real (possibly shifted) dimension such as `n + mu`.
pub fn gamma_dim(p: f64, dim: f64) -> f64 {
    2.0 + (dim + 1.0) * p - (dim - 1.0) * p * p
}

pub fn fujita_exponent(n: u32) -> f64 {
    1.0 + 2.0 / f64::from(n)
}

pub fn strauss_exponent(n: u32) -> StraussExponent {
    strauss_exponent_dim(f64::from(n))
}

pub fn strauss_exponent_dim(dim: f64) -> StraussExponent {
    if dim == 1.0 {
        return StraussExponent::Unbounded;
    }
    let disc = dim * dim + 10.0 * dim - 7.0;
    StraussExponent::Finite((dim + 1.0 + disc.sqrt()) / (2.0 * (dim - 1.0)))
}

/// `mu_0(n) = (n^2 + n + 2) / (n + 2)`.
pub fn mu_zero(n: u32) -> f64 {
    let n = f64::from(n);
    (n * n + n + 2.0) / (n + 2.0)
}

pub fn classify_regime(params: &ProblemParams) -> DampingRegime {
    if params.mu >= mu_zero(params.n) {
        DampingRegime::HeatLike
    } else {
        DampingRegime::WaveLike
    }
}

/// Root of `eps^2 b log(1+b) = 1`.
///
/// Bisection on `[1e-16, max(1, 10/eps^2)]` to relative width `1e-6`, then
/// Newton iterations until the residual drops to `1e-12`.
pub fn solve_b(eps: f64) -> Result<f64> {
    log_scale_root(eps, 1.0)
}

/// Root of `eps^2 a^2 log(1+a) = 1`.
pub fn solve_a(eps: f64) -> Result<f64> {
    log_scale_root(eps, 2.0)
}

fn log_scale_root(eps: f64, power: f64) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eps must be > 0, got {eps}"
        )));
    }
    let e2 = eps * eps;
    let g = |b: f64| e2 * b.powf(power) * b.ln_1p() - 1.0;
    let dg = |b: f64| e2 * (power * b.powf(power - 1.0) * b.ln_1p() + b.powf(power) / (1.0 + b));
    let lo = 1e-16;
    let hi = (10.0 / e2).max(1.0);
    let mut b = bisect(g, lo, hi, 1e-6, 400)?;
    for _ in 0..60 {
        let r = g(b);
        if r.abs() <= 1e-12 {
            return Ok(b);
        }
        let step = r / dg(b);
        let next = b - step;
        b = if next > 0.0 { next } else { 0.5 * b };
    }
    let r = g(b);
    if r.abs() <= 1e-12 {
        Ok(b)
    } else {
        Err(Error::Numerical(format!(
            "log-scale root for eps = {eps:e} did not converge (residual {r:e})"
        )))
    }
}

/// `tau_+(r, t) = (t + r + 2k) / k`.
pub fn tau_plus(r: f64, t: f64, k: f64) -> f64 {
    (t + r + 2.0 * k) / k
}

/// Shape of the weight used by the contraction norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    /// `w = 1` for `p > 2`.
    Unit,
    /// `w = 1 / log tau_+` for `p = 2`.
    InverseLog,
    /// `w = tau_+^{p-2}` for `1 < p < 2`.
    Power(f64),
}

impl WeightKind {
    pub fn for_p(p: f64) -> Self {
        if (p - 2.0).abs() <= P_BOUNDARY_TOL {
            WeightKind::InverseLog
        } else if p > 2.0 {
            WeightKind::Unit
        } else {
            WeightKind::Power(p - 2.0)
        }
    }

    pub fn eval(&self, r: f64, t: f64, k: f64) -> f64 {
        match *self {
            WeightKind::Unit => 1.0,
            WeightKind::InverseLog => 1.0 / tau_plus(r, t, k).ln(),
            WeightKind::Power(e) => tau_plus(r, t, k).powf(e),
        }
    }
}

pub fn weight_w(r: f64, t: f64, p: f64, k: f64) -> f64 {
    WeightKind::for_p(p).eval(r, t, k)
}

/// Growth factor `D(T)` of the main a-priori estimate, with `T_k = (T+2k)/k`.
pub fn growth_d(big_t: f64, p: f64, k: f64) -> Result<f64> {
    let tk = (big_t + 2.0 * k) / k;
    Ok(match PRegime::of(p)? {
        PRegime::Critical => tk.ln(),
        PRegime::SubcriticalHigh => tk.powf(3.0 - p),
        PRegime::PEqual2 => tk * tk.ln(),
        PRegime::SubcriticalLow => tk.powf(gamma(p, 3) / 2.0),
    })
}

/// Lifespan form and eps-exponent from one of the reference tables.
pub fn predicted_lifespan(
    params: &ProblemParams,
    reference: Reference,
) -> Result<LifespanPrediction> {
    let p = params.p;
    let regime = PRegime::of(p).ok();
    let (form, exponent) = match reference {
        Reference::New1d => {
            let regime = PRegime::of(p)?;
            match regime {
                PRegime::SubcriticalLow => (LifespanForm::Power, 2.0 * p * (p - 1.0) / gamma(p, 3)),
                PRegime::PEqual2 => (LifespanForm::BEps, 1.0),
                PRegime::SubcriticalHigh => (LifespanForm::Power, p * (p - 1.0) / (3.0 - p)),
                PRegime::Critical => (LifespanForm::Exponential, p * (p - 1.0)),
            }
        }
        Reference::Heat => {
            let pf = fujita_exponent(params.n);
            let n = f64::from(params.n);
            if (p - pf).abs() <= P_BOUNDARY_TOL {
                (LifespanForm::Exponential, p - 1.0)
            } else if p < pf {
                (LifespanForm::Power, (p - 1.0) / (2.0 - n * (p - 1.0)))
            } else {
                return Err(Error::InvalidParameter(format!(
                    "heat-like table covers 1 < p <= p_F = {pf}, got {p}"
                )));
            }
        }
        Reference::Wave => {
            let dim = f64::from(params.n) + params.mu;
            match strauss_exponent_dim(dim) {
                StraussExponent::Finite(ps) if (p - ps).abs() <= P_BOUNDARY_TOL => {
                    (LifespanForm::Exponential, p * (p - 1.0))
                }
                s if s.exceeds(p) => (LifespanForm::Power, 2.0 * p * (p - 1.0) / gamma_dim(p, dim)),
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "wave-like table covers 1 < p <= p_S(n + mu), got {p}"
                    )))
                }
            }
        }
        Reference::Nondamped => match params.n {
            1 => (LifespanForm::Power, (p - 1.0) / 2.0),
            2 if (p - 2.0).abs() <= P_BOUNDARY_TOL => (LifespanForm::AEps, 1.0),
            2 if p < 2.0 => (LifespanForm::Power, (p - 1.0) / (3.0 - p)),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "undamped nonzero-speed table covers n = 1, or n = 2 with p <= 2; got n = {}, p = {p}",
                    params.n
                )))
            }
        },
    };
    Ok(LifespanPrediction {
        regime,
        form,
        exponent,
        reference,
    })
}

/// Whether the zero-moment lifespan is longer than the heat-like one for
/// small `eps`, decided on the forms and exponents alone.
pub fn outlives_heat(p: f64) -> Result<bool> {
    let params = ProblemParams::damped_1d(p, 2.0, 1.0)?;
    let new = predicted_lifespan(&params, Reference::New1d)?;
    let heat = predicted_lifespan(&params, Reference::Heat)?;
    Ok(match (new.form, heat.form) {
        (LifespanForm::Power, LifespanForm::Power) => new.exponent > heat.exponent,
        // b(eps) grows like eps^-2 / log(1/eps), faster than any eps^-(2-delta).
        (LifespanForm::BEps, LifespanForm::Power) => heat.exponent < 2.0,
        (LifespanForm::Exponential, LifespanForm::Exponential) => new.exponent > heat.exponent,
        _ => false,
    })
}
