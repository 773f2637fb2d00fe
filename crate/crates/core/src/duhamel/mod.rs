//! Duhamel operator on the characteristic lattice, the diamond march and
//! Picard solvers for the integral equation, and the a-priori checks.

pub mod apriori;
pub mod march;
pub mod norms;
pub mod operator;
pub mod picard;

pub use apriori::{
    fuzz_interpolation, interpolation_bound_check, verify_apriori, AprioriKind, AprioriOptions,
    FuzzReport, WeightReport,
};
pub use march::{
    confirm_blowup, diamond_march, march_status, march_with, Confirmation, DiamondMarcher,
    MarchOptions, MarchStatus, DEFAULT_THRESHOLD,
};
pub use norms::{weighted_norm, weighted_norm_upto, NormKind};
pub use operator::{apply_l, split_parts, theta_majorant, DuhamelOperator};
pub use picard::{picard_solve, PicardReport};
