//! Lifespan regressions in the linearising coordinates of each lifespan form,
//! and their comparison with the predicted exponents.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::records::LifespanRecord;
use crate::numerics::{fit_line, fit_through_origin};
use crate::scaling::{
    predicted_lifespan, solve_b, LifespanForm, LifespanPrediction, ProblemParams, Reference,
};

/// Fewest resolved records accepted by a fit.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `ln T` against `ln(1/eps)`.
    Power,
    /// `T` against `b(eps)` through the origin.
    BEps,
    /// `ln ln T` against `ln(1/eps)`.
    Exponential,
}

impl FitModel {
    pub fn form(&self) -> LifespanForm {
        match self {
            FitModel::Power => LifespanForm::Power,
            FitModel::BEps => LifespanForm::BEps,
            FitModel::Exponential => LifespanForm::Exponential,
        }
    }

    /// The model matching a predicted lifespan form.
    pub fn for_form(form: LifespanForm) -> Result<Self> {
        match form {
            LifespanForm::Power => Ok(FitModel::Power),
            LifespanForm::BEps => Ok(FitModel::BEps),
            LifespanForm::Exponential => Ok(FitModel::Exponential),
            LifespanForm::AEps => Err(Error::Unsupported(
                "no fit model for the a(eps) form".into(),
            )),
        }
    }
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitModel::Power => "power",
            FitModel::BEps => "b_eps",
            FitModel::Exponential => "exponential",
        })
    }
}

impl FromStr for FitModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(FitModel::Power),
            "b_eps" => Ok(FitModel::BEps),
            "exponential" => Ok(FitModel::Exponential),
            other => Err(Error::Config(format!(
                "unknown fit model `{other}` (expected power, b_eps or exponential)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: FitModel,
    pub solver: String,
    pub p: f64,
    pub n: usize,
    pub eps_min: f64,
    pub eps_max: f64,
    /// Power: `alpha` in `T ~ eps^-alpha`; b_eps: `C` in `T ~ C b(eps)`; exponential: `beta` in `ln T ~ eps^-beta`.
    pub exponent: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub theoretical: Option<f64>,
    pub relative_deviation: Option<f64>,
    /// Slope of `ln T` against `ln(1/eps)`, whatever the model.
    pub log_slope: f64,
    /// `max(T/b) / min(T/b)` for the b_eps model.
    pub ratio_spread: Option<f64>,
}

/// Fit-eligible records, one per `eps` (the finest spacing wins), sorted by `eps` descending.
fn select(records: &[LifespanRecord]) -> Vec<&LifespanRecord> {
    let mut chosen: Vec<&LifespanRecord> = Vec::new();
    for r in records
        .iter()
        .filter(|r| r.status.fit_eligible() && r.t_blowup.is_some())
    {
        match chosen.iter_mut().find(|c| c.eps == r.eps) {
            Some(c) if r.h < c.h => *c = r,
            Some(_) => {}
            None => chosen.push(r),
        }
    }
    chosen.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    chosen
}

fn theory(p: f64, model: FitModel) -> Option<f64> {
    let params = ProblemParams::damped_1d(p, 2.0, 1.0).ok()?;
    let pred = predicted_lifespan(&params, Reference::New1d).ok()?;
    (pred.form == model.form() && model != FitModel::BEps).then_some(pred.exponent)
}

fn fit_selected(sel: &[&LifespanRecord], model: FitModel) -> Result<ScalingFit> {
    if sel.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "fits need at least {MIN_FIT_POINTS} resolved records, got {}",
            sel.len()
        )));
    }
    let first = sel[0];
    if sel
        .iter()
        .any(|r| r.p != first.p || r.solver != first.solver)
    {
        return Err(Error::InvalidParameter(
            "records mix powers or solvers".into(),
        ));
    }
    if model == FitModel::Exponential && first.solver != "ode" {
        return Err(Error::Unsupported(format!(
            "exponential-regime fits accept ODE surrogate records only, got solver `{}`",
            first.solver
        )));
    }
    let x: Vec<f64> = sel.iter().map(|r| -r.eps.ln()).collect();
    let ln_t: Vec<f64> = sel
        .iter()
        .map(|r| r.ln_t_blowup().unwrap_or(f64::NAN))
        .collect();
    let log_fit = fit_line(&x, &ln_t)?;
    let (lf, ratio_spread) = match model {
        FitModel::Power => (log_fit, None),
        FitModel::BEps => {
            let b: Vec<f64> = sel.iter().map(|r| solve_b(r.eps)).collect::<Result<_>>()?;
            let t: Vec<f64> = sel
                .iter()
                .map(|r| r.t_blowup.map(|t| t.value()).unwrap_or(f64::NAN))
                .collect();
            let ratios: Vec<f64> = t.iter().zip(&b).map(|(t, b)| t / b).collect();
            let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            (fit_through_origin(&b, &t)?, Some(hi / lo))
        }
        FitModel::Exponential => {
            if let Some(r) = sel
                .iter()
                .find(|r| r.ln_t_blowup().is_some_and(|l| l <= 0.0))
            {
                return Err(Error::InvalidParameter(format!(
                    "exponential fit needs T > 1, got T = {} at eps = {}",
                    r.t_blowup.map(|t| t.value()).unwrap_or(f64::NAN),
                    r.eps
                )));
            }
            let y: Vec<f64> = ln_t.iter().map(|l| l.ln()).collect();
            (fit_line(&x, &y)?, None)
        }
    };
    if !lf.slope.is_finite() {
        return Err(Error::Numerical("fit produced a non-finite slope".into()));
    }
    let theoretical = theory(first.p, model);
    Ok(ScalingFit {
        model,
        solver: first.solver.clone(),
        p: first.p,
        n: sel.len(),
        eps_min: sel.last().map(|r| r.eps).unwrap_or(f64::NAN),
        eps_max: first.eps,
        exponent: lf.slope,
        stderr: lf.slope_stderr,
        intercept: lf.intercept,
        theoretical,
        relative_deviation: theoretical.map(|t| (lf.slope - t).abs() / t.abs()),
        log_slope: log_fit.slope,
        ratio_spread,
    })
}

/// Least-squares fit of the model over all fit-eligible records.
pub fn fit_exponent(records: &[LifespanRecord], model: FitModel) -> Result<ScalingFit> {
    fit_selected(&select(records), model)
}

/// Fits over consecutive windows of `window` amplitudes, largest `eps` first.
pub fn fit_windows(
    records: &[LifespanRecord],
    model: FitModel,
    window: usize,
) -> Result<Vec<ScalingFit>> {
    if window < MIN_FIT_POINTS {
        return Err(Error::InvalidParameter(format!(
            "window must hold at least {MIN_FIT_POINTS} records, got {window}"
        )));
    }
    let sel = select(records);
    if sel.len() < window {
        return Err(Error::InsufficientData(format!(
            "{} resolved records, window needs {window}",
            sel.len()
        )));
    }
    sel.windows(window)
        .map(|w| fit_selected(w, model))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryVerdict {
    pub model: FitModel,
    pub fitted: f64,
    pub predicted: Option<f64>,
    pub relative_deviation: Option<f64>,
    pub tolerance: f64,
    pub ratio_spread: Option<f64>,
    pub pass: bool,
    /// Exponent of the heat-like prediction at the same `p`.
    pub heat_exponent: Option<f64>,
    /// Whether the fitted lifespan grows faster than the heat-like one as `eps -> 0`.
    pub outlives_heat: Option<bool>,
}

/// Compares a fit with a prediction of the same form.
///
/// Power and exponential fits pass when the exponent is within `tolerance`
/// (relative); b_eps fits pass when `T / b(eps)` varies by less than a factor 2.
pub fn compare_with_theory(
    fit: &ScalingFit,
    prediction: &LifespanPrediction,
    tolerance: f64,
) -> Result<TheoryVerdict> {
    if FitModel::for_form(prediction.form)? != fit.model {
        return Err(Error::Precondition(format!(
            "regime mismatch: {} fit against a {:?} prediction",
            fit.model, prediction.form
        )));
    }
    let (predicted, deviation, pass) = match fit.model {
        FitModel::BEps => (None, None, fit.ratio_spread.is_some_and(|s| s < 2.0)),
        _ => {
            let d = (fit.exponent - prediction.exponent).abs() / prediction.exponent.abs();
            (Some(prediction.exponent), Some(d), d <= tolerance)
        }
    };
    let heat = ProblemParams::damped_1d(fit.p, 2.0, 1.0)
        .and_then(|pp| predicted_lifespan(&pp, Reference::Heat))
        .ok();
    let (heat_exponent, outlives_heat) = match heat {
        Some(h) => {
            let ours = match (fit.model, h.form) {
                (FitModel::Exponential, LifespanForm::Exponential) => Some(fit.exponent),
                (FitModel::Exponential, _) => None,
                (_, LifespanForm::Power) => Some(fit.log_slope),
                _ => None,
            };
            (Some(h.exponent), ours.map(|o| o > h.exponent))
        }
        None => (None, None),
    };
    Ok(TheoryVerdict {
        model: fit.model,
        fitted: fit.exponent,
        predicted,
        relative_deviation: deviation,
        tolerance,
        ratio_spread: fit.ratio_spread,
        pass,
        heat_exponent,
        outlives_heat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::records::{BlowupTime, RunStatus};

    fn rec(eps: f64, ln_t: f64, p: f64) -> LifespanRecord {
        LifespanRecord {
            eps,
            p,
            solver: "ode".into(),
            h: 0.0,
            t_blowup: Some(BlowupTime::from_ln(ln_t)),
            status: RunStatus::Resolved,
            walltime: 0.0,
        }
    }

    fn eps_grid() -> Vec<f64> {
        (0..7).map(|i| 10f64.powf(-1.0 - 0.5 * i as f64)).collect()
    }

    #[test]
    fn power_law_recovered() {
        let recs: Vec<_> = eps_grid()
            .into_iter()
            .map(|e| rec(e, -(3.0 / 7.0) * e.ln(), 1.5))
            .collect();
        let fit = fit_exponent(&recs, FitModel::Power).unwrap();
        assert!((fit.exponent - 3.0 / 7.0).abs() < 1e-10);
        assert!(fit.stderr < 1e-6);
        assert!(fit.relative_deviation.unwrap() < 1e-9);
    }

    #[test]
    fn b_eps_recovered() {
        let recs: Vec<_> = eps_grid()
            .into_iter()
            .map(|e| rec(e, (5.0 * solve_b(e).unwrap()).ln(), 2.0))
            .collect();
        let fit = fit_exponent(&recs, FitModel::BEps).unwrap();
        assert!((fit.exponent - 5.0).abs() < 1e-6);
        assert!(fit.ratio_spread.unwrap() < 1.0 + 1e-9);
    }

    #[test]
    fn exponential_recovered() {
        let recs: Vec<_> = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5]
            .into_iter()
            .map(|e: f64| rec(e, 2.0 * e.powi(-6), 3.0))
            .collect();
        let fit = fit_exponent(&recs, FitModel::Exponential).unwrap();
        assert!((fit.exponent - 6.0).abs() < 1e-6);
        assert!(fit.stderr < 1e-6);
    }

    #[test]
    fn unresolved_and_unconfirmed_excluded() {
        let mut recs: Vec<_> = eps_grid()
            .into_iter()
            .map(|e| rec(e, -0.5 * e.ln(), 1.5))
            .collect();
        recs[0].status = RunStatus::Unconfirmed;
        recs[0].t_blowup = Some(BlowupTime::Value(1e9));
        recs.push(LifespanRecord::unresolved(1e-6, 1.5, "ode", 0.0, 0.0));
        let fit = fit_exponent(&recs, FitModel::Power).unwrap();
        assert_eq!(fit.n, 6);
        assert!((fit.exponent - 0.5).abs() < 1e-10);
    }

    #[test]
    fn too_few_points() {
        let recs: Vec<_> = [0.1, 0.01, 0.001]
            .into_iter()
            .map(|e: f64| rec(e, -e.ln(), 1.5))
            .collect();
        assert!(matches!(
            fit_exponent(&recs, FitModel::Power),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn exponential_requires_ode() {
        let mut recs: Vec<_> = [1.0, 0.9, 0.8, 0.7]
            .into_iter()
            .map(|e: f64| rec(e, 10.0 / e, 3.0))
            .collect();
        for r in &mut recs {
            r.solver = "diamond".into();
            r.status = RunStatus::Confirmed;
        }
        assert!(matches!(
            fit_exponent(&recs, FitModel::Exponential),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn windows_slide() {
        let recs: Vec<_> = eps_grid()
            .into_iter()
            .map(|e| rec(e, -0.4 * e.ln(), 1.5))
            .collect();
        let w = fit_windows(&recs, FitModel::Power, 4).unwrap();
        assert_eq!(w.len(), 4);
        assert!(w.iter().all(|f| (f.exponent - 0.4).abs() < 1e-10));
    }

    #[test]
    fn verdict_against_theory() {
        let recs: Vec<_> = eps_grid()
            .into_iter()
            .map(|e| rec(e, -0.44 * e.ln(), 1.5))
            .collect();
        let fit = fit_exponent(&recs, FitModel::Power).unwrap();
        let params = ProblemParams::damped_1d(1.5, 2.0, 1.0).unwrap();
        let pred = predicted_lifespan(&params, Reference::New1d).unwrap();
        let v = compare_with_theory(&fit, &pred, 0.1).unwrap();
        assert!(v.pass);
        assert!((v.heat_exponent.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(v.outlives_heat, Some(true));
        let p2 = ProblemParams::damped_1d(2.0, 2.0, 1.0).unwrap();
        let wrong = predicted_lifespan(&p2, Reference::New1d).unwrap();
        assert!(compare_with_theory(&fit, &wrong, 0.1).is_err());
    }
}
