//! Slicing cascade for the critical power `p = 3`: the domain factors `a_j`,
//! the exponents `b_j`, the constants `D_j` (in log form), the series `S` and
//! the resulting lifespan bound.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scaling::{PRegime, ProblemParams};

/// Deepest level accepted by [`slicing_cascade`].
pub const MAX_LEVEL: u32 = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicingState {
    pub j: u32,
    /// `a_j = a_num / a_den`
    pub a_num: u64,
    pub a_den: u64,
    pub a_j: f64,
    pub b_j: u64,
    pub log_d_j: f64,
    /// `3^{j-1} (log D0 - S log 3)`, the bound in its printed form.
    pub printed_bound: f64,
    /// `3^{j-1} (3 log D0 - S log 3)`, valid for every `D0 > 0`.
    pub corrected_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicingReport {
    pub eps: f64,
    pub c: f64,
    pub k: f64,
    pub big_k: f64,
    pub d0: f64,
    pub log_d0: f64,
    pub s: f64,
    pub states: Vec<SlicingState>,
    /// `ln(2K) + (3^S / D0)^2`
    pub ln_bound: f64,
    /// `ln(2K) + 3^{2S/3} / D0^2`, from the corrected `D_j` bound.
    pub ln_bound_sharp: f64,
    pub closed_form_matches: bool,
    pub printed_bound_holds: bool,
    pub corrected_bound_holds: bool,
}

/// `b_{j+1} = 3 b_j + 1`, `b_0 = 0`.
pub fn b_recursive(j: u32) -> BigInt {
    let mut b = BigInt::zero();
    for _ in 0..j {
        b = b * 3 + 1;
    }
    b
}

/// `b_j = (3^j - 1) / 2`.
pub fn b_closed(j: u32) -> BigInt {
    (num_traits::pow(BigInt::from(3), j as usize) - 1) / 2
}

/// `a_j = sum_{i<=j} 2^{-i}`.
pub fn a_j(j: u32) -> BigRational {
    let mut a = BigRational::zero();
    let mut term = BigRational::one();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    for _ in 0..=j {
        a += &term;
        term *= &half;
    }
    a
}

/// `S = sum_i (2i + 8) / 3^i`, summed until the terms vanish in f64.
pub fn series_s() -> f64 {
    let mut s = 0.0;
    let mut i = 0.0;
    loop {
        let term = (2.0 * i + 8.0) / 3f64.powf(i);
        s += term;
        if term < 1e-20 {
            return s;
        }
        i += 1.0;
    }
}

/// Exact partial sum `sum_{i<n} (2i + 8) / 3^i`.
pub fn series_s_partial(n: u32) -> BigRational {
    let mut s = BigRational::zero();
    let mut pow = BigInt::one();
    for i in 0..n {
        s += BigRational::new(BigInt::from(2 * i + 8), pow.clone());
        pow *= 3;
    }
    s
}

/// `log D_j` for `j = 0..=j_max` from `log D_{j+1} = 3 log D_j - log(2^{j+8} (3 b_j + 1))`.
pub fn log_d_sequence(log_d0: f64, j_max: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(j_max as usize + 1);
    let mut log_d = log_d0;
    out.push(log_d);
    for j in 0..j_max {
        let b_next = b_closed(j + 1).to_f64().unwrap_or(f64::INFINITY);
        log_d = 3.0 * log_d - ((j + 8) as f64 * 2f64.ln() + b_next.ln());
        out.push(log_d);
    }
    out
}

/// `I(t) = (D0 / 3^S) log^{1/2}(t / 2K)`, zero for `t <= 2K`.
pub fn indicator_i(t: f64, d0: f64, big_k: f64) -> f64 {
    let l = (t / (2.0 * big_k)).ln();
    if l <= 0.0 {
        return 0.0;
    }
    d0 / 3f64.powf(series_s()) * l.sqrt()
}

/// `ln` of the bound `2K exp((3^S / D0)^2)`.
pub fn critical_ln_bound(d0: f64, big_k: f64) -> f64 {
    (2.0 * big_k).ln() + (3f64.powf(series_s()) / d0).powi(2)
}

/// `ln` of `2K exp(3^{2S/3} / D0^2)`.
pub fn critical_ln_bound_sharp(d0: f64, big_k: f64) -> f64 {
    (2.0 * big_k).ln() + 3f64.powf(2.0 * series_s() / 3.0) / (d0 * d0)
}

/// Builds the cascade for `D0 = C eps^3`, `K = 4k`.
pub fn slicing_cascade(
    eps: f64,
    c: f64,
    params: &ProblemParams,
    j_max: u32,
) -> Result<SlicingReport> {
    if !matches!(PRegime::of(params.p)?, PRegime::Critical) {
        return Err(Error::Unsupported(format!(
            "slicing applies at p = 3, got p = {}",
            params.p
        )));
    }
    if j_max > MAX_LEVEL {
        return Err(Error::InvalidParameter(format!(
            "j_max must be <= {MAX_LEVEL}, got {j_max}"
        )));
    }
    if !(eps > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps and C must be positive (eps={eps}, C={c})"
        )));
    }
    let d0 = c * eps.powi(3);
    let log_d0 = c.ln() + 3.0 * eps.ln();
    let s = series_s();
    let log3 = 3f64.ln();
    let logs = log_d_sequence(log_d0, j_max);
    let mut states = Vec::with_capacity(logs.len());
    let mut closed_form_matches = true;
    let (mut printed_ok, mut corrected_ok) = (true, true);
    for (j, log_d_j) in logs.into_iter().enumerate() {
        let j = j as u32;
        let b = b_closed(j);
        closed_form_matches &= b == b_recursive(j);
        let a = a_j(j);
        let scale = 3f64.powi(j as i32 - 1);
        let printed_bound = scale * (log_d0 - s * log3);
        let corrected_bound = scale * (3.0 * log_d0 - s * log3);
        if j >= 1 {
            let tol = 1e-12 * log_d_j.abs().max(1.0);
            printed_ok &= log_d_j >= printed_bound - tol;
            corrected_ok &= log_d_j >= corrected_bound - tol;
        }
        states.push(SlicingState {
            j,
            a_num: a.numer().to_u64().unwrap_or(u64::MAX),
            a_den: a.denom().to_u64().unwrap_or(u64::MAX),
            a_j: a.to_f64().unwrap_or(f64::NAN),
            b_j: b.to_u64().unwrap_or(u64::MAX),
            log_d_j,
            printed_bound,
            corrected_bound,
        });
    }
    let big_k = 4.0 * params.k;
    Ok(SlicingReport {
        eps,
        c,
        k: params.k,
        big_k,
        d0,
        log_d0,
        s,
        states,
        ln_bound: critical_ln_bound(d0, big_k),
        ln_bound_sharp: critical_ln_bound_sharp(d0, big_k),
        closed_form_matches,
        printed_bound_holds: printed_ok,
        corrected_bound_holds: corrected_ok,
    })
}
