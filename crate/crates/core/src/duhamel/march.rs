//! Diamond marching for the integral equation `u = eps u0 + L(|u|^p)`.
//!
//! Each step uses the exact characteristic identity of the free wave
//! operator plus the source over the lattice diamond, evaluated at the diamond
//! centre from the row already computed. The scheme is explicit and
//! reproduces `eps u0` exactly at the nodes when the source is switched off.

use serde::{Deserialize, Serialize};

use crate::data::{free_solution, DataProfile};
use crate::duhamel::operator::DuhamelOperator;
use crate::error::{Error, Result};
use crate::lattice::{CharacteristicField, CharacteristicGrid};
use crate::numerics::abs_pow;
use crate::scaling::ProblemParams;

pub const DEFAULT_THRESHOLD: f64 = 1e8;

/// Largest relative disagreement between the blow-up times at `h` and `h/2`
/// for a detection to count as confirmed.
pub const CONFIRM_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MarchStatus {
    /// Reached `t_max` below the threshold.
    Completed,
    /// `sup |u| >= threshold` first on the row at `t_b`.
    BlewUp { t_b: f64 },
    /// A non-finite value appeared at `t` before the threshold was crossed.
    Unresolved { t: f64 },
}

impl MarchStatus {
    pub fn blowup_time(&self) -> Option<f64> {
        match self {
            MarchStatus::BlewUp { t_b } => Some(*t_b),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchOptions {
    pub threshold: f64,
    /// Switch off `|u|^p`, leaving the free solution.
    pub linear: bool,
}

impl Default for MarchOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            linear: false,
        }
    }
}

/// Row-by-row solver holding three time levels.
#[derive(Debug, Clone)]
pub struct DiamondMarcher<'a> {
    profile: &'a DataProfile,
    params: ProblemParams,
    grid: CharacteristicGrid,
    op: DuhamelOperator,
    opts: MarchOptions,
}

impl<'a> DiamondMarcher<'a> {
    pub fn new(
        profile: &'a DataProfile,
        params: &ProblemParams,
        grid: &CharacteristicGrid,
        opts: MarchOptions,
    ) -> Result<Self> {
        params.require_solver_setting()?;
        if (grid.k() - params.k).abs() > 1e-12 * params.k
            || (profile.k - params.k).abs() > 1e-12 * params.k
        {
            return Err(Error::GridMismatch(format!(
                "support radius differs between lattice ({}), data ({}) and params ({})",
                grid.k(),
                profile.k,
                params.k
            )));
        }
        if !(opts.threshold > 0.0) {
            return Err(Error::InvalidParameter(
                "blow-up threshold must be positive".into(),
            ));
        }
        Ok(Self {
            profile,
            params: *params,
            grid: *grid,
            op: DuhamelOperator::for_params(params),
            opts,
        })
    }

    fn source(&self, u: f64, t: f64) -> f64 {
        if self.opts.linear {
            0.0
        } else {
            abs_pow(u, self.params.p) * self.op.time_weight(t)
        }
    }

    fn free(&self, x: f64, t: f64) -> f64 {
        self.params.eps * free_solution(self.profile, x, t, self.params.mu)
    }

    /// Marches to `t_max`, handing each row to `visit`. Stops after the first
    /// row on which the threshold is crossed or a non-finite value appears.
    pub fn run<V: FnMut(usize, &[f64])>(&self, mut visit: V) -> MarchStatus {
        let g = &self.grid;
        let nx = g.nx();
        let h = g.h();
        let h2 = h * h;

        let mut prev: Vec<f64> = (0..nx).map(|i| self.free(g.x(i), 0.0)).collect();
        prev[0] = 0.0;
        prev[nx - 1] = 0.0;
        if let Some(st) = self.inspect(0, &prev) {
            visit(0, &prev);
            return st;
        }
        visit(0, &prev);
        if g.nt() == 1 {
            return MarchStatus::Completed;
        }

        // First step over the backward triangle, with a predictor for the apex.
        let src0: Vec<f64> = prev.iter().map(|&u| self.source(u, 0.0)).collect();
        let mut cur = vec![0.0; nx];
        for i in 1..nx - 1 {
            let lin = self.free(g.x(i), h);
            let pred = lin + 0.5 * h2 * src0[i];
            let apex = self.source(pred, h);
            cur[i] = lin + h2 / 6.0 * (src0[i - 1] + src0[i + 1] + apex);
        }
        let stop = self.inspect(1, &cur);
        visit(1, &cur);
        if let Some(st) = stop {
            return st;
        }

        let mut next = vec![0.0; nx];
        for n in 1..g.nt() - 1 {
            let t = g.t(n);
            let w = self.op.time_weight(t);
            let p = self.params.p;
            let linear = self.opts.linear;
            for i in 1..nx - 1 {
                let s = if linear { 0.0 } else { abs_pow(cur[i], p) * w };
                next[i] = cur[i + 1] + cur[i - 1] - prev[i] + h2 * s;
            }
            let stop = self.inspect(n + 1, &next);
            visit(n + 1, &next);
            if let Some(st) = stop {
                return st;
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        MarchStatus::Completed
    }

    fn inspect(&self, n: usize, row: &[f64]) -> Option<MarchStatus> {
        let mut sup: f64 = 0.0;
        for v in row {
            if !v.is_finite() {
                return Some(MarchStatus::Unresolved { t: self.grid.t(n) });
            }
            sup = sup.max(v.abs());
        }
        (sup >= self.opts.threshold).then(|| MarchStatus::BlewUp {
            t_b: self.grid.t(n),
        })
    }
}

/// Runs the march and stores the field. Rows after a blow-up or failure row
/// are not computed (`valid_rows` marks the end).
pub fn diamond_march(
    profile: &DataProfile,
    params: &ProblemParams,
    grid: &CharacteristicGrid,
    threshold: f64,
) -> Result<(CharacteristicField, MarchStatus)> {
    march_with(
        profile,
        params,
        grid,
        MarchOptions {
            threshold,
            ..MarchOptions::default()
        },
    )
}

pub fn march_with(
    profile: &DataProfile,
    params: &ProblemParams,
    grid: &CharacteristicGrid,
    opts: MarchOptions,
) -> Result<(CharacteristicField, MarchStatus)> {
    let marcher = DiamondMarcher::new(profile, params, grid, opts)?;
    let mut values = Vec::new();
    let status = marcher.run(|_, row| values.extend_from_slice(row));
    let field = CharacteristicField::from_rows(*grid, values)?;
    Ok((field, status))
}

/// Runs the march without storing the field.
pub fn march_status(
    profile: &DataProfile,
    params: &ProblemParams,
    grid: &CharacteristicGrid,
    threshold: f64,
) -> Result<MarchStatus> {
    let opts = MarchOptions {
        threshold,
        ..MarchOptions::default()
    };
    Ok(DiamondMarcher::new(profile, params, grid, opts)?.run(|_, _| {}))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confirmation {
    pub h: f64,
    pub coarse: MarchStatus,
    pub fine: MarchStatus,
    /// `|t_b(h) - t_b(h/2)| / t_b(h/2)` when both runs blew up.
    pub rel_diff: Option<f64>,
    pub confirmed: bool,
}

impl Confirmation {
    /// Blow-up time at the finer spacing when the detection is confirmed.
    pub fn t_blowup(&self) -> Option<f64> {
        if self.confirmed {
            self.fine.blowup_time()
        } else {
            None
        }
    }
}

/// Blow-up detection at `h = k / n_per_k` confirmed by a rerun at `h/2`.
pub fn confirm_blowup(
    profile: &DataProfile,
    params: &ProblemParams,
    n_per_k: usize,
    t_max: f64,
    threshold: f64,
) -> Result<Confirmation> {
    let coarse_grid = CharacteristicGrid::covering(params.k, n_per_k, t_max)?;
    let coarse = march_status(profile, params, &coarse_grid, threshold)?;
    let fine = march_status(profile, params, &coarse_grid.refined(), threshold)?;
    let rel_diff = match (coarse.blowup_time(), fine.blowup_time()) {
        (Some(a), Some(b)) => Some((a - b).abs() / b),
        _ => None,
    };
    Ok(Confirmation {
        h: coarse_grid.h(),
        coarse,
        fine,
        rel_diff,
        confirmed: rel_diff.is_some_and(|d| d < CONFIRM_TOL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{dalembert_u0, make_bump_pair, BumpKind, DataMode};

    fn thm22() -> DataProfile {
        make_bump_pair(BumpKind::PolyBump, 2.0, DataMode::Thm22).unwrap()
    }

    #[test]
    fn zero_data_stay_zero() {
        let prof = thm22();
        let mut params = ProblemParams::damped_1d(2.0, 2.0, 1.0).unwrap();
        params.eps = 0.0;
        let g = CharacteristicGrid::covering(2.0, 8, 20.0).unwrap();
        let (u, st) = diamond_march(&prof, &params, &g, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(st, MarchStatus::Completed);
        assert_eq!(u.sup_abs(), 0.0);
    }

    #[test]
    fn linear_march_reproduces_free_solution() {
        for mode in [DataMode::Thm22, DataMode::ZeroMomentGeneral, DataMode::Free] {
            let prof = make_bump_pair(BumpKind::PolyBump, 2.0, mode).unwrap();
            let params = ProblemParams::damped_1d(2.0, 2.0, 0.8).unwrap();
            let g = CharacteristicGrid::covering(2.0, 16, 6.0).unwrap();
            let opts = MarchOptions {
                linear: true,
                ..MarchOptions::default()
            };
            let (u, st) = march_with(&prof, &params, &g, opts).unwrap();
            assert_eq!(st, MarchStatus::Completed);
            for (n, row) in u.rows() {
                for (i, v) in row.iter().enumerate() {
                    let exact = 0.8 * dalembert_u0(&prof, g.x(i), g.t(n));
                    assert!(
                        (v - exact).abs() < 1e-12,
                        "{mode}: ({}, {})",
                        g.x(i),
                        g.t(n)
                    );
                }
            }
        }
    }

    #[test]
    fn solution_stays_in_light_cone() {
        let prof = thm22();
        let params = ProblemParams::damped_1d(2.0, 2.0, 0.5).unwrap();
        let g = CharacteristicGrid::covering(2.0, 16, 8.0).unwrap();
        let (u, _) = diamond_march(&prof, &params, &g, DEFAULT_THRESHOLD).unwrap();
        assert!(u.max_outside_cone() <= 1e-12);
    }

    #[test]
    fn blowup_time_decreases_with_amplitude() {
        let prof = thm22();
        let g = CharacteristicGrid::covering(2.0, 16, 200.0).unwrap();
        let t = |eps: f64| {
            let params = ProblemParams::damped_1d(2.0, 2.0, eps).unwrap();
            march_status(&prof, &params, &g, DEFAULT_THRESHOLD)
                .unwrap()
                .blowup_time()
                .expect("blow-up within t_max")
        };
        let (t1, t2) = (t(1.0), t(2.0));
        assert!(t2 < t1, "t_b(2) = {t2}, t_b(1) = {t1}");
    }

    #[test]
    fn confirmation_agrees_across_refinement() {
        let prof = thm22();
        let params = ProblemParams::damped_1d(2.0, 2.0, 2.0).unwrap();
        let c = confirm_blowup(&prof, &params, 16, 100.0, DEFAULT_THRESHOLD).unwrap();
        assert!(c.confirmed, "{c:?}");
        assert!(c.t_blowup().unwrap() > 0.0);
    }

    #[test]
    fn short_horizon_is_not_confirmed() {
        let prof = thm22();
        let params = ProblemParams::damped_1d(2.0, 2.0, 0.5).unwrap();
        let c = confirm_blowup(&prof, &params, 8, 1.0, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(c.coarse, MarchStatus::Completed);
        assert!(!c.confirmed && c.t_blowup().is_none());
    }

    #[test]
    fn rejects_unsupported_damping() {
        let prof = thm22();
        let params = ProblemParams::new(2.0, 1, 1.0, 2.0, 1.0).unwrap();
        let g = CharacteristicGrid::covering(2.0, 4, 1.0).unwrap();
        assert!(diamond_march(&prof, &params, &g, DEFAULT_THRESHOLD).is_err());
    }
}
