//! Explicit leapfrog finite differences for the damped problem
//!
//! ```text
//! v_tt - v_xx + mu/(1+t) v_t = |v|^p
//! ```
//!
//! and for its transformed form
//!
//! ```text
//! u_tt - u_xx + mu(2-mu)/(4(1+t)^2) u = |u|^p / (1+t)^{mu(p-1)/2}
//! ```
//!
//! The damping term is centred, `(v^{n+1} - v^{n-1}) / (2 dt)`, which keeps
//! the update explicit. The first step is a second order Taylor step using the
//! equation at `t = 0`. Edges are held at zero; the lattice is wide enough
//! that the light cone never reaches them.

use serde::{Deserialize, Serialize};

use crate::data::{transformed_speed, DataProfile};
use crate::duhamel::march::{march_with, MarchOptions, MarchStatus};
use crate::error::{Error, Result};
use crate::lattice::{CharacteristicField, CharacteristicGrid};
use crate::numerics::{abs_pow, fit_line};
use crate::scaling::ProblemParams;

pub const MAX_CFL: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    dx: f64,
    dt: f64,
    /// `x_j = (j - m) dx`
    m: usize,
    steps: usize,
}

impl UniformGrid {
    pub fn new(dx: f64, dt: f64, x_max: f64, t_max: f64) -> Result<Self> {
        if !(dx > 0.0) || !(dt > 0.0) {
            return Err(Error::InvalidParameter("spacings must be positive".into()));
        }
        let cfl = dt / dx;
        if cfl > MAX_CFL + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "CFL number dt/dx = {cfl} exceeds {MAX_CFL}"
            )));
        }
        if !(t_max >= 0.0) || !(x_max > 0.0) {
            return Err(Error::InvalidParameter(
                "extents must be nonnegative".into(),
            ));
        }
        let m = (x_max / dx).round() as usize;
        if ((m as f64) * dx - x_max).abs() > 1e-9 * x_max {
            return Err(Error::GridMismatch(format!(
                "x_max = {x_max} is not a multiple of dx = {dx}"
            )));
        }
        let steps = (t_max / dt - 1e-9).ceil().max(0.0) as usize;
        Ok(Self { dx, dt, m, steps })
    }

    /// `dx = k / n_per_k`, `dt = 1 / ceil(1 / (0.9 dx))` so that integer
    /// times are hit exactly; the x nodes contain those of
    /// [`CharacteristicGrid::covering`] with a margin of at least one unit.
    pub fn covering(k: f64, n_per_k: usize, t_max: f64) -> Result<Self> {
        let cg = CharacteristicGrid::covering(k, n_per_k, t_max)?;
        let dx = cg.h();
        let dt = 1.0 / (1.0 / (MAX_CFL * dx)).ceil();
        let extra = (1.0 / dx).ceil() as usize;
        let m = cg.center() + extra;
        let steps = (cg.t_max() / dt - 1e-9).ceil().max(0.0) as usize;
        Ok(Self { dx, dt, m, steps })
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn cfl(&self) -> f64 {
        self.dt / self.dx
    }

    pub fn nx(&self) -> usize {
        2 * self.m + 1
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - self.m as f64) * self.dx
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn x_max(&self) -> f64 {
        self.m as f64 * self.dx
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.steps)
    }

    pub fn center(&self) -> usize {
        self.m
    }

    /// Step index with `t_n = t`, if `t` is on the time grid.
    pub fn step_of(&self, t: f64) -> Option<usize> {
        let q = t / self.dt;
        let r = q.round();
        if (q - r).abs() > 1e-9 * q.max(1.0) || r < 0.0 || r as usize > self.steps {
            return None;
        }
        Some(r as usize)
    }
}

/// Three consecutive time levels.
#[derive(Debug, Clone, PartialEq)]
pub struct FdState {
    pub prev: Vec<f64>,
    pub cur: Vec<f64>,
    pub next: Vec<f64>,
    /// Index of `cur`.
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Damped equation for `v`.
    Ivp1,
    /// Transformed equation for `u = (1+t)^{mu/2} v`.
    Ivp2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    pub threshold: f64,
    /// Keep every `record_every`-th level (0 keeps only the last).
    pub record_every: usize,
    pub linear: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            threshold: crate::duhamel::march::DEFAULT_THRESHOLD,
            record_every: 1,
            linear: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdTrace {
    pub grid: UniformGrid,
    pub formulation: Formulation,
    pub times: Vec<f64>,
    pub levels: Vec<Vec<f64>>,
    pub status: MarchStatus,
    /// Largest `|value|` seen in the two edge columns.
    pub boundary_max: f64,
}

impl FdTrace {
    /// Recorded level at time `t`.
    pub fn level_at(&self, t: f64) -> Option<&[f64]> {
        let tol = 1e-9 * t.abs().max(1.0);
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .map(|i| self.levels[i].as_slice())
    }
}

struct Coefficients {
    mu: f64,
    p: f64,
    decay: f64,
    formulation: Formulation,
    linear: bool,
}

impl Coefficients {
    fn damping(&self, t: f64) -> f64 {
        match self.formulation {
            Formulation::Ivp1 => self.mu / (1.0 + t),
            Formulation::Ivp2 => 0.0,
        }
    }

    fn mass(&self, t: f64) -> f64 {
        match self.formulation {
            Formulation::Ivp1 => 0.0,
            Formulation::Ivp2 => self.mu * (2.0 - self.mu) / (4.0 * (1.0 + t) * (1.0 + t)),
        }
    }

    fn source_weight(&self, t: f64) -> f64 {
        match self.formulation {
            Formulation::Ivp1 => 1.0,
            Formulation::Ivp2 => (1.0 + t).powf(-self.decay),
        }
    }

    fn source(&self, v: f64, w: f64) -> f64 {
        if self.linear {
            0.0
        } else {
            abs_pow(v, self.p) * w
        }
    }
}

fn solve(
    profile: &DataProfile,
    params: &ProblemParams,
    grid: &UniformGrid,
    formulation: Formulation,
    opts: FdOptions,
) -> Result<FdTrace> {
    params.require_solver_setting()?;
    if !(opts.threshold > 0.0) {
        return Err(Error::InvalidParameter(
            "blow-up threshold must be positive".into(),
        ));
    }
    let co = Coefficients {
        mu: params.mu,
        p: params.p,
        decay: params.source_decay(),
        formulation,
        linear: opts.linear,
    };
    let nx = grid.nx();
    let (dt, dx) = (grid.dt(), grid.dx());
    let r2 = (dt / dx) * (dt / dx);
    let dt2 = dt * dt;
    let eps = params.eps;

    let mut trace = FdTrace {
        grid: *grid,
        formulation,
        times: Vec::new(),
        levels: Vec::new(),
        status: MarchStatus::Completed,
        boundary_max: 0.0,
    };
    let record = |trace: &mut FdTrace, n: usize, level: &[f64], last: bool| {
        let keep = if opts.record_every == 0 {
            last
        } else {
            n.is_multiple_of(opts.record_every) || last
        };
        if keep && trace.times.last().is_none_or(|&t| t < grid.t(n)) {
            trace.times.push(grid.t(n));
            trace.levels.push(level.to_vec());
        }
    };
    let inspect = |level: &[f64], n: usize| -> Option<MarchStatus> {
        let mut sup: f64 = 0.0;
        for v in level {
            if !v.is_finite() {
                return Some(MarchStatus::Unresolved { t: grid.t(n) });
            }
            sup = sup.max(v.abs());
        }
        (sup >= opts.threshold).then(|| MarchStatus::BlewUp { t_b: grid.t(n) })
    };

    let mut prev: Vec<f64> = (0..nx).map(|j| eps * profile.f(grid.x(j))).collect();
    prev[0] = 0.0;
    prev[nx - 1] = 0.0;
    if let Some(st) = inspect(&prev, 0) {
        trace.status = st;
        record(&mut trace, 0, &prev, true);
        return Ok(trace);
    }
    record(&mut trace, 0, &prev, grid.steps() == 0);
    if grid.steps() == 0 {
        return Ok(trace);
    }

    let speed_mu = match formulation {
        Formulation::Ivp1 => 0.0,
        Formulation::Ivp2 => params.mu,
    };
    let mut cur = vec![0.0; nx];
    {
        let damp = co.damping(0.0);
        let mass = co.mass(0.0);
        let w = co.source_weight(0.0);
        for j in 1..nx - 1 {
            let vt = eps * transformed_speed(profile, grid.x(j), speed_mu);
            let vxx = (prev[j + 1] - 2.0 * prev[j] + prev[j - 1]) / (dx * dx);
            let acc = vxx - damp * vt - mass * prev[j] + co.source(prev[j], w);
            cur[j] = prev[j] + dt * vt + 0.5 * dt2 * acc;
        }
    }
    let stop = inspect(&cur, 1);
    record(&mut trace, 1, &cur, stop.is_some() || grid.steps() == 1);
    if let Some(st) = stop {
        trace.status = st;
        return Ok(trace);
    }

    let mut next = vec![0.0; nx];
    for n in 1..grid.steps() {
        let t = grid.t(n);
        let a = 0.5 * co.damping(t) * dt;
        let mass = co.mass(t);
        let w = co.source_weight(t);
        let inv = 1.0 / (1.0 + a);
        for j in 1..nx - 1 {
            let lap = r2 * (cur[j + 1] - 2.0 * cur[j] + cur[j - 1]);
            let rhs = 2.0 * cur[j] - (1.0 - a) * prev[j]
                + lap
                + dt2 * (co.source(cur[j], w) - mass * cur[j]);
            next[j] = rhs * inv;
        }
        trace.boundary_max = trace
            .boundary_max
            .max(next[1].abs())
            .max(next[nx - 2].abs());
        let stop = inspect(&next, n + 1);
        record(
            &mut trace,
            n + 1,
            &next,
            stop.is_some() || n + 1 == grid.steps(),
        );
        if let Some(st) = stop {
            trace.status = st;
            return Ok(trace);
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(trace)
}

/// Damped equation for `v` with data `(eps f, eps g)`.
pub fn solve_ivp1(
    profile: &DataProfile,
    params: &ProblemParams,
    grid: &UniformGrid,
    opts: FdOptions,
) -> Result<FdTrace> {
    solve(profile, params, grid, Formulation::Ivp1, opts)
}

/// Transformed equation for `u` with data `(eps f, eps (mu f/2 + g))`.
pub fn solve_ivp2(
    profile: &DataProfile,
    params: &ProblemParams,
    grid: &UniformGrid,
    opts: FdOptions,
) -> Result<FdTrace> {
    solve(profile, params, grid, Formulation::Ivp2, opts)
}

/// One step of the undamped, source-free leapfrog core with `r2 = (dt/dx)^2`.
pub fn leapfrog_free_step(prev: &[f64], cur: &[f64], r2: f64, next: &mut [f64]) {
    let nx = cur.len();
    next[0] = 0.0;
    next[nx - 1] = 0.0;
    for j in 1..nx - 1 {
        next[j] = 2.0 * cur[j] - prev[j] + r2 * (cur[j + 1] - 2.0 * cur[j] + cur[j - 1]);
    }
}

impl FdState {
    pub fn new(prev: Vec<f64>, cur: Vec<f64>) -> Result<Self> {
        if prev.len() != cur.len() || cur.len() < 3 {
            return Err(Error::GridMismatch(
                "time levels must have equal length >= 3".into(),
            ));
        }
        let next = vec![0.0; cur.len()];
        Ok(Self {
            prev,
            cur,
            next,
            n: 1,
        })
    }

    pub fn step_free(&mut self, r2: f64) {
        leapfrog_free_step(&self.prev, &self.cur, r2, &mut self.next);
        std::mem::swap(&mut self.prev, &mut self.cur);
        std::mem::swap(&mut self.cur, &mut self.next);
        self.n += 1;
    }

    /// Exchanges the two latest levels, reversing the direction of time.
    pub fn reverse(&mut self) {
        std::mem::swap(&mut self.prev, &mut self.cur);
    }
}

/// Relative sup difference between an FD level and a lattice row at the same
/// time, over the common x nodes.
pub fn compare_with_lattice(
    level: &[f64],
    fd: &UniformGrid,
    field: &CharacteristicField,
    t: f64,
) -> Result<f64> {
    let g = field.grid();
    if (fd.dx() - g.h()).abs() > 1e-12 * g.h() {
        return Err(Error::GridMismatch("FD and lattice spacings differ".into()));
    }
    let n = g
        .row_of(t)
        .filter(|&n| n < field.valid_rows())
        .ok_or_else(|| Error::GridMismatch(format!("t = {t} is not a computed lattice row")))?;
    let row = field.row(n);
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (i, &u) in row.iter().enumerate() {
        let x = g.x(i);
        let j = fd.center() as i64 + (x / fd.dx()).round() as i64;
        if j < 0 || j as usize >= level.len() {
            continue;
        }
        diff = diff.max((level[j as usize] - u).abs());
        scale = scale.max(u.abs());
    }
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Diamond,
    FdIvp1,
    FdIvp2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub resolutions: Vec<usize>,
    /// Sup differences between successive resolutions at the final time.
    pub errors: Vec<f64>,
    pub order: f64,
    /// Errors shrink at every refinement.
    pub monotone: bool,
    /// `order >= 1`.
    pub acceptable: bool,
}

/// Solution at `t_end` sampled on the x nodes of the coarsest resolution.
fn sample_at(
    solver: SolverKind,
    profile: &DataProfile,
    params: &ProblemParams,
    n_per_k: usize,
    t_end: f64,
    xs: &[f64],
) -> Result<Vec<f64>> {
    match solver {
        SolverKind::Diamond => {
            let grid = CharacteristicGrid::covering(params.k, n_per_k, t_end)?;
            let (field, status) = march_with(profile, params, &grid, MarchOptions::default())?;
            if status != MarchStatus::Completed {
                return Err(Error::Numerical(format!(
                    "run did not complete: {status:?}"
                )));
            }
            let n = grid.nt() - 1;
            xs.iter()
                .map(|&x| {
                    grid.column_of(x)
                        .map(|i| field.get(i, n))
                        .ok_or_else(|| Error::GridMismatch(format!("x = {x} not on lattice")))
                })
                .collect()
        }
        SolverKind::FdIvp1 | SolverKind::FdIvp2 => {
            let grid = UniformGrid::covering(params.k, n_per_k, t_end)?;
            let opts = FdOptions {
                record_every: 0,
                ..FdOptions::default()
            };
            let trace = if solver == SolverKind::FdIvp1 {
                solve_ivp1(profile, params, &grid, opts)?
            } else {
                solve_ivp2(profile, params, &grid, opts)?
            };
            if trace.status != MarchStatus::Completed {
                return Err(Error::Numerical(format!(
                    "run did not complete: {:?}",
                    trace.status
                )));
            }
            let level = trace
                .level_at(t_end)
                .ok_or_else(|| Error::GridMismatch(format!("t = {t_end} not on the time grid")))?;
            Ok(xs
                .iter()
                .map(|&x| level[(grid.center() as i64 + (x / grid.dx()).round() as i64) as usize])
                .collect())
        }
    }
}

/// Observed order from successive refinements: the sup difference between
/// resolutions `N_j` and `N_{j+1}` at `t_end` is fitted against `h_j` in
/// log-log coordinates.
pub fn convergence_order(
    solver: SolverKind,
    profile: &DataProfile,
    params: &ProblemParams,
    resolutions: &[usize],
    t_end: f64,
) -> Result<ConvergenceReport> {
    if resolutions.len() < 3 {
        return Err(Error::InsufficientData(
            "convergence study needs >= 3 resolutions".into(),
        ));
    }
    if resolutions.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::InvalidParameter(
            "resolutions must double successively".into(),
        ));
    }
    let coarse = CharacteristicGrid::covering(params.k, resolutions[0], t_end)?;
    if (coarse.t_max() - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "t_end = {t_end} is not a lattice time at N = {}",
            resolutions[0]
        )));
    }
    let xs: Vec<f64> = (0..coarse.nx())
        .map(|i| coarse.x(i))
        .filter(|x| x.abs() <= t_end + params.k)
        .collect();
    let samples = resolutions
        .iter()
        .map(|&n| sample_at(solver, profile, params, n, t_end, &xs))
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = samples
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        })
        .collect();
    let hs: Vec<f64> = resolutions[..errors.len()]
        .iter()
        .map(|&n| (params.k / n as f64).ln())
        .collect();
    let logs: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let order = if errors.iter().all(|e| *e > 0.0) {
        fit_line(&hs, &logs)?.slope
    } else {
        f64::NAN
    };
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    Ok(ConvergenceReport {
        resolutions: resolutions.to_vec(),
        errors,
        order,
        monotone,
        acceptable: order >= 1.0,
    })
}
