//! The functional `F(t) = int u(x,t) dx` of a computed solution, its ODE
//! identity, and the two inequalities used to drive it to infinity.

use serde::{Deserialize, Serialize};

use crate::data::DataProfile;
use crate::duhamel::march::MarchStatus;
use crate::error::{Error, Result};
use crate::lattice::CharacteristicField;
use crate::numerics::abs_pow;
use crate::scaling::ProblemParams;

/// Relative slack allowed in the discrete inequality checks.
pub const INEQUALITY_SLACK: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalTrace {
    pub times: Vec<f64>,
    pub f: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// `int |u|^p dx`
    pub source: Vec<f64>,
    /// `(1+t)^{1-p} int |u|^p dx`, the right-hand side of the identity for `F''`.
    pub rhs: Vec<f64>,
    pub status: MarchStatus,
    pub p: f64,
    pub k: f64,
}

/// `F`, `F'`, `F''` from rows sampled every `dt` with spacing `dx`.
///
/// `F` is the trapezoidal sum (the end columns are zero), `F'` and `F''`
/// centred differences with second order one-sided formulas at the ends.
pub fn trace_from_rows<'a, I>(
    rows: I,
    dx: f64,
    dt: f64,
    params: &ProblemParams,
    status: MarchStatus,
) -> Result<FunctionalTrace>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let p = params.p;
    let decay = params.source_decay();
    let mut f = Vec::new();
    let mut source = Vec::new();
    for row in rows {
        let n = row.len();
        let (mut s1, mut sp) = (0.0, 0.0);
        for (i, &u) in row.iter().enumerate() {
            let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
            s1 += w * u;
            sp += w * abs_pow(u, p);
        }
        f.push(dx * s1);
        source.push(dx * sp);
    }
    let n = f.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "second differences need 3 rows, got {n}"
        )));
    }
    let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    let mut f1 = vec![0.0; n];
    let mut f2 = vec![0.0; n];
    for i in 1..n - 1 {
        f1[i] = (f[i + 1] - f[i - 1]) / (2.0 * dt);
        f2[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (dt * dt);
    }
    f1[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
    f1[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dt);
    f2[0] = f2[1];
    f2[n - 1] = f2[n - 2];
    let rhs = times
        .iter()
        .zip(&source)
        .map(|(t, s)| s * (1.0 + t).powf(-decay))
        .collect();
    Ok(FunctionalTrace {
        times,
        f,
        f1,
        f2,
        source,
        rhs,
        status,
        p,
        k: params.k,
    })
}

/// Functional of a characteristic-lattice field.
pub fn compute_f(
    field: &CharacteristicField,
    params: &ProblemParams,
    status: MarchStatus,
) -> Result<FunctionalTrace> {
    let h = field.grid().h();
    trace_from_rows(field.rows().map(|(_, r)| r), h, h, params, status)
}

impl FunctionalTrace {
    /// `max |F'' - rhs| / max |rhs|` over interior rows.
    pub fn identity_residual(&self) -> f64 {
        let n = self.f.len();
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 1..n - 1 {
            diff = diff.max((self.f2[i] - self.rhs[i]).abs());
            scale = scale.max(self.rhs[i].abs());
        }
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    }

    /// `F` nondecreasing and `F'' >= 0` on interior rows, up to round-off.
    pub fn monotone_convex(&self) -> bool {
        let scale = self.f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
        let n = self.f.len();
        self.f.windows(2).all(|w| w[1] >= w[0] - tol)
            && self.f2[1..n - 1]
                .iter()
                .zip(&self.times[1..n - 1])
                .all(|(v, t)| *v >= -tol / (1.0 + t).powi(2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub checked: usize,
    pub violations: usize,
    /// Smallest `lhs / bound` over checked points with a positive bound.
    pub min_ratio: f64,
    /// Location `(x, t)` of the smallest ratio (`x` is 0 for trace checks).
    pub worst: Option<(f64, f64)>,
    /// `max(0, 1 - min_ratio)`, the relative slack the data actually need.
    pub needed_slack: f64,
    pub slack: f64,
}

impl InequalityReport {
    fn new(slack: f64) -> Self {
        Self {
            checked: 0,
            violations: 0,
            min_ratio: f64::INFINITY,
            worst: None,
            needed_slack: 0.0,
            slack,
        }
    }

    fn add(&mut self, lhs: f64, bound: f64, at: (f64, f64)) {
        self.checked += 1;
        if bound > 0.0 {
            let r = lhs / bound;
            if r < self.min_ratio {
                self.min_ratio = r;
                self.worst = Some(at);
            }
        }
        let floor = 1e-14 * bound.abs().max(1e-300);
        if lhs < (1.0 - self.slack) * bound - floor {
            self.violations += 1;
        }
    }

    fn finish(mut self) -> Self {
        if self.min_ratio.is_finite() {
            self.needed_slack = (1.0 - self.min_ratio).max(0.0);
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// `F'' >= 2^{-(p-1)} (t+k)^{-2(p-1)} |F|^p` on interior rows.
pub fn holder_lower_bound_check(trace: &FunctionalTrace, slack: f64) -> InequalityReport {
    let p = trace.p;
    let c = 2f64.powf(-(p - 1.0));
    let mut rep = InequalityReport::new(slack);
    let n = trace.f.len();
    for i in 1..n - 1 {
        let t = trace.times[i];
        let bound = c * (t + trace.k).powf(-2.0 * (p - 1.0)) * abs_pow(trace.f[i], p);
        rep.add(trace.f2[i], bound, (0.0, t));
    }
    rep.finish()
}

/// `u >= eps f(x-t) / 2` for `x + t >= k`, `|x - t| <= k`; needs sign data.
pub fn pointwise_bound_check(
    field: &CharacteristicField,
    profile: &DataProfile,
    params: &ProblemParams,
    slack: f64,
) -> Result<InequalityReport> {
    if !profile.flags().thm22 {
        return Err(Error::Precondition(
            "pointwise bound needs f >= 0 and f + g = 0".into(),
        ));
    }
    let g = field.grid();
    let k = params.k;
    let mut rep = InequalityReport::new(slack);
    for (n, row) in field.rows() {
        let t = g.t(n);
        for (i, &u) in row.iter().enumerate() {
            let x = g.x(i);
            if x + t < k || (x - t).abs() > k {
                continue;
            }
            rep.add(u, 0.5 * params.eps * profile.f(x - t), (x, t));
        }
    }
    Ok(rep.finish())
}
