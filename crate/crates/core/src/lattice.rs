//! Uniform lattice with `dx = dt = h`, so the characteristics `x +- t` run
//! along grid diagonals, and fields stored on it.

use crate::error::{Error, Result};

/// Relative tolerance used when checking that lengths are whole multiples of `h`.
const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicGrid {
    h: f64,
    /// Half-width index: `x_i = (i - m) h` for `i = 0..=2m`.
    m: usize,
    /// Number of time steps: `t_n = n h` for `n = 0..=steps`.
    steps: usize,
    k: f64,
}

fn whole_multiple(len: f64, h: f64, what: &str) -> Result<usize> {
    let q = len / h;
    let r = q.round();
    if (q - r).abs() > ALIGN_TOL * q.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "{what} = {len} is not a multiple of h = {h}"
        )));
    }
    Ok(r as usize)
}

impl CharacteristicGrid {
    /// Lattice on `[-x_max, x_max] x [0, t_max]`. Both lengths must be whole
    /// multiples of `h`, and `x_max >= t_max + k` so the light cone of the data
    /// never reaches the edge columns.
    pub fn new(h: f64, x_max: f64, t_max: f64, k: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lattice spacing must be positive, got {h}"
            )));
        }
        if !(t_max >= 0.0) || !(x_max > 0.0) {
            return Err(Error::InvalidParameter(
                "lattice extents must be nonnegative".into(),
            ));
        }
        if !(k > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "support radius k must be > 1, got {k}"
            )));
        }
        let m = whole_multiple(x_max, h, "x_max")?;
        let steps = whole_multiple(t_max, h, "t_max")?;
        if (m as f64) * h < (steps as f64) * h + k - ALIGN_TOL * h {
            return Err(Error::Precondition(format!(
                "x_max = {x_max} does not contain the light cone up to t_max = {t_max} (k = {k})"
            )));
        }
        Ok(Self { h, m, steps, k })
    }

    /// Lattice with `h = k / n_per_k` reaching at least `t_max`, padded by one
    /// spacing beyond the cone `|x| <= t + k`.
    pub fn covering(k: f64, n_per_k: usize, t_max: f64) -> Result<Self> {
        if n_per_k == 0 {
            return Err(Error::InvalidParameter(
                "resolution must be positive".into(),
            ));
        }
        if !(k > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "support radius k must be > 1, got {k}"
            )));
        }
        let h = k / n_per_k as f64;
        let steps = (t_max / h - ALIGN_TOL).ceil().max(0.0) as usize;
        let m = steps + n_per_k + 1;
        Ok(Self { h, m, steps, k })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn x_max(&self) -> f64 {
        self.m as f64 * self.h
    }

    pub fn t_max(&self) -> f64 {
        self.steps as f64 * self.h
    }

    pub fn nx(&self) -> usize {
        2 * self.m + 1
    }

    /// Number of time levels, `t_0 = 0` through `t_max`.
    pub fn nt(&self) -> usize {
        self.steps + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.m as f64) * self.h
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.h
    }

    /// Column index of `x = 0`.
    pub fn center(&self) -> usize {
        self.m
    }

    /// Column nearest to `x`, if it lies on the lattice.
    pub fn column_of(&self, x: f64) -> Option<usize> {
        let q = x / self.h + self.m as f64;
        let r = q.round();
        if (q - r).abs() > ALIGN_TOL * q.abs().max(1.0) || r < 0.0 || r as usize >= self.nx() {
            return None;
        }
        Some(r as usize)
    }

    pub fn row_of(&self, t: f64) -> Option<usize> {
        let q = t / self.h;
        let r = q.round();
        if (q - r).abs() > ALIGN_TOL * q.max(1.0) || r < 0.0 || r as usize > self.steps {
            return None;
        }
        Some(r as usize)
    }

    /// Same extents at half the spacing.
    pub fn refined(&self) -> Self {
        Self {
            h: 0.5 * self.h,
            m: 2 * self.m,
            steps: 2 * self.steps,
            k: self.k,
        }
    }

    /// Same spacing and `k`, truncated to the first `steps` steps.
    pub fn truncated(&self, steps: usize) -> Self {
        Self {
            steps: steps.min(self.steps),
            ..*self
        }
    }

    /// `|x_i| <= t_n + k`, the light cone of data supported in `[-k, k]`.
    pub fn in_cone(&self, i: usize, n: usize) -> bool {
        self.x(i).abs() <= self.t(n) + self.k + ALIGN_TOL * self.h
    }

    /// `t_n - k <= |x_i| <= t_n + k`.
    pub fn in_annulus(&self, i: usize, n: usize) -> bool {
        let r = self.x(i).abs();
        let t = self.t(n);
        let slack = ALIGN_TOL * self.h;
        r >= t - self.k - slack && r <= t + self.k + slack
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "lattices differ: h {} vs {}, nx {} vs {}, nt {} vs {}",
                self.h,
                other.h,
                self.nx(),
                other.nx(),
                self.nt(),
                other.nt()
            )));
        }
        Ok(())
    }
}

/// Values on a [`CharacteristicGrid`], row-major in time. Only the first
/// `valid_rows` rows hold computed data.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicField {
    grid: CharacteristicGrid,
    values: Vec<f64>,
    valid_rows: usize,
}

impl CharacteristicField {
    pub fn zeros(grid: CharacteristicGrid) -> Self {
        Self {
            values: vec![0.0; grid.nx() * grid.nt()],
            valid_rows: grid.nt(),
            grid,
        }
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: CharacteristicGrid, f: F) -> Self {
        let nx = grid.nx();
        let mut values = Vec::with_capacity(nx * grid.nt());
        for n in 0..grid.nt() {
            let t = grid.t(n);
            values.extend((0..nx).map(|i| f(grid.x(i), t)));
        }
        Self {
            grid,
            values,
            valid_rows: grid.nt(),
        }
    }

    /// Builds a field from rows already laid out row-major; `values.len()` must
    /// be a whole number of rows not exceeding the grid.
    pub fn from_rows(grid: CharacteristicGrid, mut values: Vec<f64>) -> Result<Self> {
        let nx = grid.nx();
        if !values.len().is_multiple_of(nx) || values.len() / nx > grid.nt() {
            return Err(Error::GridMismatch(format!(
                "{} values do not form whole rows of width {nx} within {} rows",
                values.len(),
                grid.nt()
            )));
        }
        let valid_rows = values.len() / nx;
        values.resize(nx * grid.nt(), 0.0);
        Ok(Self {
            grid,
            values,
            valid_rows,
        })
    }

    pub fn grid(&self) -> &CharacteristicGrid {
        &self.grid
    }

    pub fn valid_rows(&self) -> usize {
        self.valid_rows
    }

    pub fn set_valid_rows(&mut self, rows: usize) {
        self.valid_rows = rows.min(self.grid.nt());
    }

    /// Time of the last computed row.
    pub fn t_last(&self) -> f64 {
        self.grid.t(self.valid_rows.saturating_sub(1))
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let nx = self.grid.nx();
        &self.values[n * nx..(n + 1) * nx]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [f64] {
        let nx = self.grid.nx();
        &mut self.values[n * nx..(n + 1) * nx]
    }

    pub fn get(&self, i: usize, n: usize) -> f64 {
        self.values[n * self.grid.nx() + i]
    }

    pub fn set(&mut self, i: usize, n: usize, v: f64) {
        let nx = self.grid.nx();
        self.values[n * nx + i] = v;
    }

    /// Computed rows, row-major.
    pub fn values(&self) -> &[f64] {
        &self.values[..self.valid_rows * self.grid.nx()]
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        let len = self.valid_rows * self.grid.nx();
        &mut self.values[..len]
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.values().chunks_exact(self.grid.nx()).enumerate()
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            valid_rows: self.valid_rows,
        }
    }

    /// Largest `|value|` at computed nodes outside the light cone `|x| <= t + k`.
    pub fn max_outside_cone(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (n, row) in self.rows() {
            for (i, v) in row.iter().enumerate() {
                if !self.grid.in_cone(i, n) {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    /// Largest `|value|` over computed nodes with `t <= t_limit`.
    pub fn sup_abs_upto(&self, t_limit: f64) -> f64 {
        let mut sup: f64 = 0.0;
        for (n, row) in self.rows() {
            if self.grid.t(n) > t_limit + ALIGN_TOL * self.grid.h() {
                break;
            }
            for v in row {
                sup = sup.max(v.abs());
            }
        }
        sup
    }

    pub fn sup_abs(&self) -> f64 {
        self.values().iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// `sup |self - other| / sup |other|` over the rows computed in both.
    pub fn relative_sup_diff(&self, other: &Self) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let rows = self.valid_rows.min(other.valid_rows);
        let len = rows * self.grid.nx();
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (a, b) in self.values[..len].iter().zip(&other.values[..len]) {
            diff = diff.max((a - b).abs());
            scale = scale.max(b.abs());
        }
        Ok(if scale > 0.0 { diff / scale } else { diff })
    }
}
