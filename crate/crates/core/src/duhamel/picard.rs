//! Picard iteration `U_1 = 0`, `U_l = L(|eps u0 + U_{l-1}|^p)` in the weighted
//! sup norm.

use serde::{Deserialize, Serialize};

use crate::data::{free_solution, DataProfile};
use crate::duhamel::norms::{weighted_diff, weighted_norm, NormKind};
use crate::duhamel::operator::DuhamelOperator;
use crate::error::{Error, Result};
use crate::lattice::{CharacteristicField, CharacteristicGrid};
use crate::numerics::abs_pow;
use crate::scaling::ProblemParams;

/// Number of consecutive growing increments taken as non-contraction.
pub const DIVERGENCE_RUN: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    /// `||U_l - U_{l-1}||` for `l = 2, 3, ...`
    pub increments: Vec<f64>,
    /// Successive increment ratios.
    pub ratios: Vec<f64>,
    /// Iterates computed, counting `U_1 = 0`.
    pub iterations: usize,
    pub converged: bool,
    /// Increments grew over `DIVERGENCE_RUN` consecutive iterations.
    pub non_contraction: bool,
    /// Weighted norm of the final `U`.
    pub norm_u: f64,
}

impl PicardReport {
    /// Largest increment ratio over the first `count` ratios.
    pub fn max_ratio(&self, count: usize) -> Option<f64> {
        if self.ratios.len() < count || count == 0 {
            return None;
        }
        Some(
            self.ratios[..count]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max),
        )
    }
}

/// Solves `U = L(|eps u0 + U|^p)` on `grid` (up to `T = grid.t_max()`) and
/// returns `u = eps u0 + U` with the iteration report.
pub fn picard_solve(
    profile: &DataProfile,
    params: &ProblemParams,
    grid: &CharacteristicGrid,
    tol: f64,
    max_iter: usize,
) -> Result<(CharacteristicField, PicardReport)> {
    params.require_solver_setting()?;
    if (grid.k() - params.k).abs() > 1e-12 * params.k {
        return Err(Error::GridMismatch(
            "lattice and params disagree on k".into(),
        ));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidParameter(
            "need tol > 0 and max_iter >= 1".into(),
        ));
    }
    let p = params.p;
    let op = DuhamelOperator::for_params(params);
    let lin = CharacteristicField::from_fn(*grid, |x, t| {
        params.eps * free_solution(profile, x, t, params.mu)
    });

    let mut big_u = CharacteristicField::zeros(*grid);
    let mut report = PicardReport {
        increments: Vec::new(),
        ratios: Vec::new(),
        iterations: 1,
        converged: false,
        non_contraction: false,
        norm_u: 0.0,
    };
    let mut growth_run = 0;
    while report.iterations < max_iter {
        let next = {
            let prev = &big_u;
            op.apply_fn_indexed(grid, |i, n| abs_pow(lin.get(i, n) + prev.get(i, n), p))
        };
        let inc = weighted_diff(&next, &big_u, p);
        let norm = weighted_norm(&next, p, NormKind::Weighted);
        big_u = next;
        report.iterations += 1;
        if !inc.is_finite() || !norm.is_finite() {
            report.non_contraction = true;
            break;
        }
        if let Some(&last) = report.increments.last() {
            let ratio = if last > 0.0 { inc / last } else { 0.0 };
            report.ratios.push(ratio);
            growth_run = if inc > last { growth_run + 1 } else { 0 };
        }
        report.increments.push(inc);
        report.norm_u = norm;
        if inc <= tol * norm {
            report.converged = true;
            break;
        }
        if growth_run >= DIVERGENCE_RUN {
            report.non_contraction = true;
            break;
        }
    }
    let mut u = lin;
    for (a, b) in u.values_mut().iter_mut().zip(big_u.values()) {
        *a += b;
    }
    Ok((u, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_bump_pair, BumpKind, DataMode};
    use crate::duhamel::march::{diamond_march, DEFAULT_THRESHOLD};

    fn thm22() -> DataProfile {
        make_bump_pair(BumpKind::PolyBump, 2.0, DataMode::Thm22).unwrap()
    }

    #[test]
    fn zero_data_converge_immediately() {
        let params = ProblemParams::damped_1d(2.0, 2.0, 0.0).unwrap();
        let g = CharacteristicGrid::covering(2.0, 8, 5.0).unwrap();
        let (u, rep) = picard_solve(&thm22(), &params, &g, 1e-12, 20).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 2);
        assert_eq!(u.sup_abs(), 0.0);
    }

    #[test]
    fn small_data_contract_geometrically() {
        let params = ProblemParams::damped_1d(2.0, 2.0, 1e-3).unwrap();
        let g = CharacteristicGrid::covering(2.0, 16, 5.0).unwrap();
        let (_, rep) = picard_solve(&thm22(), &params, &g, 1e-300, 7).unwrap();
        assert!(!rep.non_contraction);
        // Increments shrink by roughly eps^{p-1} per step until round-off.
        assert!(rep.converged, "{rep:?}");
        assert!(rep.max_ratio(3).unwrap() < 1e-3, "{rep:?}");
    }

    #[test]
    fn fixed_point_matches_march() {
        let prof = thm22();
        let params = ProblemParams::damped_1d(2.0, 2.0, 0.2).unwrap();
        let g = CharacteristicGrid::covering(2.0, 32, 5.0).unwrap();
        let (u, rep) = picard_solve(&prof, &params, &g, 1e-12, 60).unwrap();
        assert!(rep.converged, "{rep:?}");
        let (m, _) = diamond_march(&prof, &params, &g, DEFAULT_THRESHOLD).unwrap();
        assert!(u.relative_sup_diff(&m).unwrap() < 1e-3);
    }

    #[test]
    fn large_data_flagged() {
        let params = ProblemParams::damped_1d(2.0, 2.0, 3.0).unwrap();
        let g = CharacteristicGrid::covering(2.0, 4, 30.0).unwrap();
        let (_, rep) = picard_solve(&thm22(), &params, &g, 1e-12, 40).unwrap();
        assert!(rep.non_contraction && !rep.converged, "{rep:?}");
    }
}
