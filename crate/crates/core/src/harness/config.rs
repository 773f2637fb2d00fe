//! Experiment configuration, read from a flat TOML file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{make_bump_pair, BumpKind, DataMode, DataProfile};
use crate::duhamel::march::DEFAULT_THRESHOLD;
use crate::error::{Error, Result};
use crate::harness::fit::FitModel;
use crate::scaling::ProblemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Diamond,
    Fd,
    Ode,
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverChoice::Diamond => "diamond",
            SolverChoice::Fd => "fd",
            SolverChoice::Ode => "ode",
        })
    }
}

impl FromStr for SolverChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diamond" => Ok(SolverChoice::Diamond),
            "fd" => Ok(SolverChoice::Fd),
            "ode" => Ok(SolverChoice::Ode),
            other => Err(Error::Config(format!(
                "unknown solver `{other}` (expected diamond, fd or ode)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub p: f64,
    pub mu: f64,
    pub n: u32,
    pub k: f64,
    pub bump: BumpKind,
    pub mode: DataMode,
    pub solver: SolverChoice,
    /// Amplitudes, kept in descending order.
    pub eps: Vec<f64>,
    /// Grid points per `k`, powers of two.
    pub resolutions: Vec<usize>,
    pub t_max: f64,
    pub threshold: f64,
    /// ODE surrogate constants; derived from the data when absent.
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub parallel: bool,
    pub fit_model: Option<FitModel>,
    /// Sliding-window length for drift fits; 0 disables them.
    pub fit_window: usize,
    pub fit_tolerance: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            p: 1.5,
            mu: 2.0,
            n: 1,
            k: 2.0,
            bump: BumpKind::PolyBump,
            mode: DataMode::Thm22,
            solver: SolverChoice::Ode,
            eps: vec![1e-1, 1e-2, 1e-3, 1e-4],
            resolutions: vec![16],
            t_max: 100.0,
            threshold: DEFAULT_THRESHOLD,
            c1: None,
            c2: None,
            out_dir: PathBuf::from("out"),
            seed: 0,
            parallel: true,
            fit_model: None,
            fit_window: 0,
            fit_tolerance: 0.1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validated()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks ranges, sorts `eps` descending and removes duplicates.
    pub fn validated(mut self) -> Result<Self> {
        let params = self.params()?;
        match self.solver {
            SolverChoice::Ode if params.n != 1 || params.mu != 2.0 => {
                return Err(Error::Unsupported(
                    "the ODE surrogate models n = 1, mu = 2".into(),
                ))
            }
            SolverChoice::Ode => {}
            _ => params.require_solver_setting()?,
        }
        if let Some(bad) = self.eps.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            return Err(Error::Config(format!(
                "eps values must be positive, got {bad}"
            )));
        }
        self.eps.sort_by(|a, b| b.total_cmp(a));
        self.eps.dedup();
        if let Some(bad) = self
            .resolutions
            .iter()
            .find(|r| !r.is_power_of_two() || **r < 2)
        {
            return Err(Error::Config(format!(
                "resolutions must be powers of two >= 2, got {bad}"
            )));
        }
        self.resolutions.sort_unstable();
        self.resolutions.dedup();
        if self.solver != SolverChoice::Ode && self.resolutions.is_empty() {
            return Err(Error::Config(
                "grid solvers need at least one resolution".into(),
            ));
        }
        if !(self.t_max > 0.0) || !(self.threshold > 0.0) || !(self.fit_tolerance > 0.0) {
            return Err(Error::Config(
                "t_max, threshold and fit_tolerance must be positive".into(),
            ));
        }
        for (name, c) in [("c1", self.c1), ("c2", self.c2)] {
            if let Some(c) = c {
                if !(c > 0.0) {
                    return Err(Error::Config(format!("{name} must be positive, got {c}")));
                }
            }
        }
        if self.fit_model == Some(FitModel::Exponential) && self.solver != SolverChoice::Ode {
            return Err(Error::Unsupported(format!(
                "exponential-regime fits accept ODE surrogate records only; direct {} runs cannot reach lifespans of size exp(C eps^-6)",
                self.solver
            )));
        }
        Ok(self)
    }

    /// Problem parameters at unit amplitude.
    pub fn params(&self) -> Result<ProblemParams> {
        ProblemParams::new(self.p, self.n, self.mu, self.k, 1.0)
    }

    pub fn profile(&self) -> Result<DataProfile> {
        make_bump_pair(self.bump, self.k, self.mode)
    }
}
