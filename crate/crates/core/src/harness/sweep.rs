//! Amplitude sweeps over the PDE solvers and the ODE surrogate.

use std::time::Instant;

use rayon::prelude::*;

use crate::data::DataProfile;
use crate::duhamel::march::{confirm_blowup, MarchStatus, CONFIRM_TOL};
use crate::error::Result;
use crate::fd::{solve_ivp1, FdOptions, UniformGrid};
use crate::functional::ode::{ode_comparison_lifespan, OdeSurrogate, Rk45Options};
use crate::harness::config::{ExperimentConfig, SolverChoice};
use crate::harness::records::{BlowupTime, LifespanRecord, RunStatus};
use crate::scaling::ProblemParams;

/// ODE surrogate with the configured constants, or the data-derived ones.
pub fn surrogate_for(config: &ExperimentConfig) -> Result<OdeSurrogate> {
    let params = config.params()?;
    let base = OdeSurrogate::from_profile(&params, &config.profile()?)?;
    OdeSurrogate::new(
        base.p,
        base.k,
        config.c1.unwrap_or(base.c1),
        config.c2.unwrap_or(base.c2),
        base.f0,
    )
}

fn grid_record(
    solver: SolverChoice,
    profile: &DataProfile,
    params: &ProblemParams,
    n_per_k: usize,
    config: &ExperimentConfig,
) -> Result<(f64, MarchStatus, bool)> {
    match solver {
        SolverChoice::Diamond => {
            let c = confirm_blowup(profile, params, n_per_k, config.t_max, config.threshold)?;
            Ok((c.h, c.coarse, c.confirmed))
        }
        _ => {
            let opts = FdOptions {
                threshold: config.threshold,
                record_every: 0,
                linear: false,
            };
            let coarse_grid = UniformGrid::covering(params.k, n_per_k, config.t_max)?;
            let coarse = solve_ivp1(profile, params, &coarse_grid, opts)?.status;
            let fine_grid = UniformGrid::covering(params.k, 2 * n_per_k, config.t_max)?;
            let fine = solve_ivp1(profile, params, &fine_grid, opts)?.status;
            let confirmed = match (coarse.blowup_time(), fine.blowup_time()) {
                (Some(a), Some(b)) => (a - b).abs() / b < CONFIRM_TOL,
                _ => false,
            };
            Ok((coarse_grid.dx(), coarse, confirmed))
        }
    }
}

fn run_one(config: &ExperimentConfig, eps: f64, n_per_k: usize) -> LifespanRecord {
    let start = Instant::now();
    let solver = config.solver;
    let label = solver.to_string();
    let h_nominal = if solver == SolverChoice::Ode {
        0.0
    } else {
        config.k / n_per_k as f64
    };
    let attempt = || -> Result<LifespanRecord> {
        let params = config.params()?.with_eps(eps);
        if solver == SolverChoice::Ode {
            let sur = surrogate_for(config)?;
            return ode_comparison_lifespan(
                eps,
                &params,
                sur.c1,
                sur.c2,
                sur.f0,
                &Rk45Options::default(),
            );
        }
        let profile = config.profile()?;
        let (h, status, confirmed) = grid_record(solver, &profile, &params, n_per_k, config)?;
        let (t_blowup, status) = match status.blowup_time() {
            Some(t) if confirmed => (Some(BlowupTime::Value(t)), RunStatus::Confirmed),
            Some(t) => (Some(BlowupTime::Value(t)), RunStatus::Unconfirmed),
            None => (None, RunStatus::Unresolved),
        };
        Ok(LifespanRecord {
            eps,
            p: config.p,
            solver: label.clone(),
            h,
            t_blowup,
            status,
            walltime: 0.0,
        })
    };
    let mut rec = attempt()
        .unwrap_or_else(|_| LifespanRecord::unresolved(eps, config.p, &label, h_nominal, 0.0));
    rec.walltime = start.elapsed().as_secs_f64();
    rec
}

/// One record per `(eps, resolution)` (one per `eps` for the ODE surrogate),
/// sorted by `(eps, h)`. Failed runs become unresolved records.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<LifespanRecord>> {
    let config = config.clone().validated()?;
    let resolutions: Vec<usize> = if config.solver == SolverChoice::Ode {
        vec![0]
    } else {
        config.resolutions.clone()
    };
    let jobs: Vec<(f64, usize)> = config
        .eps
        .iter()
        .flat_map(|&e| resolutions.iter().map(move |&n| (e, n)))
        .collect();
    let mut records: Vec<LifespanRecord> = if config.parallel {
        jobs.par_iter()
            .map(|&(e, n)| run_one(&config, e, n))
            .collect()
    } else {
        jobs.iter().map(|&(e, n)| run_one(&config, e, n)).collect()
    };
    records.sort_by(|a, b| a.eps.total_cmp(&b.eps).then(a.h.total_cmp(&b.h)));
    Ok(records)
}
