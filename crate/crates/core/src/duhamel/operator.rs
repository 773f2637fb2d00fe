//! The Duhamel operator
//!
//! ```text
//! L(F)(x,t) = 1/2 int_0^t int_{x-t+s}^{x+t-s} F(y,s) (1+s)^{-d} dy ds
//! ```
//!
//! evaluated on a characteristic lattice. `W = L(F)` solves
//! `W_tt - W_xx = F (1+s)^{-d}` with zero data, so on the lattice it obeys the
//! diamond identity
//!
//! ```text
//! W(x,t+h) = W(x+h,t) + W(x-h,t) - W(x,t-h) + 1/2 int_diamond S
//! ```
//!
//! The diamond integral (area `2h^2`) is taken by the midpoint rule and the
//! first step integrates the backward triangle by its vertex average. Both are
//! exact for sources affine in `(y, s)`, so the global error is `O(h^2)`.

use crate::error::{Error, Result};
use crate::lattice::{CharacteristicField, CharacteristicGrid};
use crate::numerics::adaptive_simpson;
use crate::scaling::ProblemParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuhamelOperator {
    decay: f64,
}

impl DuhamelOperator {
    /// Operator attached to the transformed problem: the source weight is
    /// `(1+s)^{-mu(p-1)/2}`, i.e. `(1+s)^{-(p-1)}` at `mu = 2`.
    pub fn for_params(params: &ProblemParams) -> Self {
        Self {
            decay: params.source_decay(),
        }
    }

    pub fn with_decay(decay: f64) -> Result<Self> {
        if !decay.is_finite() || decay < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "decay exponent must be >= 0, got {decay}"
            )));
        }
        Ok(Self { decay })
    }

    /// Time weight switched off, `L(1) = t^2 / 2`.
    pub fn unweighted() -> Self {
        Self { decay: 0.0 }
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    #[inline]
    pub fn time_weight(&self, s: f64) -> f64 {
        if self.decay == 0.0 {
            1.0
        } else {
            (1.0 + s).powf(-self.decay)
        }
    }

    /// `L(F)` for a field sampled on the lattice. Values are exact up to
    /// quadrature at every node whose backward triangle stays inside the
    /// lattice, in particular everywhere when `F` lives in the light cone.
    pub fn apply(&self, f: &CharacteristicField) -> Result<CharacteristicField> {
        let grid = *f.grid();
        if f.valid_rows() < grid.nt() {
            return Err(Error::GridMismatch(format!(
                "source field holds {} of {} rows",
                f.valid_rows(),
                grid.nt()
            )));
        }
        Ok(self.collect(&grid, |n, row| row.copy_from_slice(f.row(n))))
    }

    /// `L(F)` for a closed-form source `F(x, t)`.
    pub fn apply_fn<F: Fn(f64, f64) -> f64>(
        &self,
        grid: &CharacteristicGrid,
        source: F,
    ) -> CharacteristicField {
        self.collect(grid, |n, row| {
            let t = grid.t(n);
            for (i, v) in row.iter_mut().enumerate() {
                *v = source(grid.x(i), t);
            }
        })
    }

    /// `L(F)` for a source given by lattice indices `(i, n)`.
    pub fn apply_fn_indexed<F: Fn(usize, usize) -> f64>(
        &self,
        grid: &CharacteristicGrid,
        source: F,
    ) -> CharacteristicField {
        self.collect(grid, |n, row| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = source(i, n);
            }
        })
    }

    fn collect<S>(&self, grid: &CharacteristicGrid, source: S) -> CharacteristicField
    where
        S: FnMut(usize, &mut [f64]),
    {
        let mut out = CharacteristicField::zeros(*grid);
        self.stream(grid, source, |n, row| out.row_mut(n).copy_from_slice(row));
        out
    }

    /// Row-by-row evaluation without storing the field. `source(n, row)` fills
    /// the unweighted source at `t_n` and is called once per row in order;
    /// `visit(n, row)` receives `L(F)` at `t_n`.
    pub fn stream<S, V>(&self, grid: &CharacteristicGrid, mut source: S, mut visit: V)
    where
        S: FnMut(usize, &mut [f64]),
        V: FnMut(usize, &[f64]),
    {
        let nx = grid.nx();
        let nt = grid.nt();
        let h2 = grid.h() * grid.h();
        let mut prev = vec![0.0; nx];
        visit(0, &prev);
        if nt == 1 {
            return;
        }
        let mut src_lo = vec![0.0; nx];
        let mut src_hi = vec![0.0; nx];
        source(0, &mut src_lo);
        self.weigh(&mut src_lo, grid.t(0));
        source(1, &mut src_hi);
        self.weigh(&mut src_hi, grid.t(1));

        let mut cur = vec![0.0; nx];
        for i in 1..nx - 1 {
            cur[i] = h2 / 6.0 * (src_lo[i - 1] + src_lo[i + 1] + src_hi[i]);
        }
        visit(1, &cur);

        // src_hi holds the weighted source on the current row from here on.
        let mut next = vec![0.0; nx];
        for n in 1..nt - 1 {
            for i in 1..nx - 1 {
                next[i] = cur[i + 1] + cur[i - 1] - prev[i] + h2 * src_hi[i];
            }
            visit(n + 1, &next);
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
            if n + 1 < nt - 1 {
                source(n + 1, &mut src_hi);
                self.weigh(&mut src_hi, grid.t(n + 1));
            }
        }
    }

    fn weigh(&self, row: &mut [f64], t: f64) {
        let w = self.time_weight(t);
        if w != 1.0 {
            row.iter_mut().for_each(|v| *v *= w);
        }
    }
}

/// `L(F)` with the operator attached to `params`, checking that the field
/// lives on a lattice with the same support radius.
pub fn apply_l(f: &CharacteristicField, params: &ProblemParams) -> Result<CharacteristicField> {
    if (f.grid().k() - params.k).abs() > 1e-12 * params.k {
        return Err(Error::GridMismatch(format!(
            "field built for k = {} but params have k = {}",
            f.grid().k(),
            params.k
        )));
    }
    DuhamelOperator::for_params(params).apply(f)
}

/// The two halves `L_1, L_2` of `L(F)` for a radial source `F(|y|, s)`,
/// computed by nested adaptive quadrature independently of the lattice:
///
/// ```text
/// L_1 = 1/2 int_0^t ds int_{|r-t+s|}^{r+t-s} F (1+s)^{-d} dy
/// L_2 =     int_0^{(t-r)_+} ds int_0^{t-r-s} F (1+s)^{-d} dy
/// ```
pub fn split_parts<F>(op: &DuhamelOperator, source: F, r: f64, t: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64, f64) -> f64,
{
    let l1_inner = |s: f64| {
        let lo = (r - t + s).abs();
        let hi = r + t - s;
        if hi <= lo {
            return 0.0;
        }
        op.time_weight(s) * adaptive_simpson(&|y: f64| source(y, s).abs(), lo, hi, tol)
    };
    let l1 = 0.5 * adaptive_simpson(&l1_inner, 0.0, t, tol);
    let top = (t - r).max(0.0);
    let l2_inner = |s: f64| {
        let hi = t - r - s;
        if hi <= 0.0 {
            return 0.0;
        }
        op.time_weight(s) * adaptive_simpson(&|y: f64| source(y, s).abs(), 0.0, hi, tol)
    };
    let l2 = if top > 0.0 {
        adaptive_simpson(&l2_inner, 0.0, top, tol)
    } else {
        0.0
    };
    (l1, l2)
}

/// Majorant of `|L(F)(x,t)|` in the characteristic coordinates
/// `alpha = s + y`, `beta = s - y`, with the time weight split as
/// `((alpha+2k)/k)^{theta(p-1)} ((beta+2k)/k)^{(1-theta)(p-1)}`:
///
/// ```text
/// int_{-k}^{t+r} dbeta int_beta^{t+r} 4^{p-1} |F| / (...) dalpha
/// ```
///
/// `source(|y|, s)` is taken as zero for `s < 0`.
pub fn theta_majorant<F>(source: F, r: f64, t: f64, theta: f64, p: f64, k: f64, tol: f64) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let top = t + r;
    let c = 4f64.powf(p - 1.0);
    let ea = theta * (p - 1.0);
    let eb = (1.0 - theta) * (p - 1.0);
    let inner = |beta: f64| {
        let wb = ((beta + 2.0 * k) / k).powf(-eb);
        // The integrand vanishes for s = (alpha + beta)/2 < 0.
        let lo = beta.max(-beta);
        if lo >= top {
            return 0.0;
        }
        let integrand = |alpha: f64| {
            let y = 0.5 * (alpha - beta);
            let s = 0.5 * (alpha + beta);
            source(y.abs(), s).abs() * ((alpha + 2.0 * k) / k).powf(-ea)
        };
        c * wb * adaptive_simpson(&integrand, lo, top, tol)
    };
    adaptive_simpson(&inner, -k, top, tol)
}
