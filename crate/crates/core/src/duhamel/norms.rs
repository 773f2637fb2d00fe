//! Sup norms over the lattice, plain and with the regime weight `w(|x|, t)`.
//!
//! The sup is taken over lattice nodes only, so it is a lower bound for the
//! sup of the underlying continuous function.

use serde::{Deserialize, Serialize};

use crate::lattice::CharacteristicField;
use crate::scaling::WeightKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Plain,
    Weighted,
}

pub fn weighted_norm(v: &CharacteristicField, p: f64, kind: NormKind) -> f64 {
    weighted_norm_upto(v, p, kind, f64::INFINITY)
}

/// Norm restricted to the rows with `t <= t_limit`.
pub fn weighted_norm_upto(v: &CharacteristicField, p: f64, kind: NormKind, t_limit: f64) -> f64 {
    let g = v.grid();
    let weight = WeightKind::for_p(p);
    let mut sup: f64 = 0.0;
    for (n, row) in v.rows() {
        let t = g.t(n);
        if t > t_limit + 1e-9 * g.h() {
            break;
        }
        for (i, val) in row.iter().enumerate() {
            let w = match kind {
                NormKind::Plain => 1.0,
                NormKind::Weighted => weight.eval(g.x(i).abs(), t, g.k()),
            };
            sup = sup.max(w * val.abs());
        }
    }
    sup
}

/// Weighted norm of `a - b` on the rows computed in both fields.
pub(crate) fn weighted_diff(a: &CharacteristicField, b: &CharacteristicField, p: f64) -> f64 {
    let g = a.grid();
    let weight = WeightKind::for_p(p);
    let rows = a.valid_rows().min(b.valid_rows());
    let mut sup: f64 = 0.0;
    for n in 0..rows {
        let t = g.t(n);
        for (i, (x, y)) in a.row(n).iter().zip(b.row(n)).enumerate() {
            sup = sup.max(weight.eval(g.x(i).abs(), t, g.k()) * (x - y).abs());
        }
    }
    sup
}
