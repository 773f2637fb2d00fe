//! Blow-up machinery for the functional `F(t) = int u dx`.

pub mod kato;
pub mod ode;
pub mod slicing;
pub mod trace;

pub use kato::{
    c_star, calibrate_cascade, cascade_shape, kato_lifespan_bound, kato_m, kato_params_for,
    lower_bound_cascade, t0_doubling, KatoParams,
};
pub use ode::{integrate, ode_comparison_lifespan, OdeSurrogate, Rk45Options};
pub use slicing::{slicing_cascade, SlicingReport, SlicingState};
pub use trace::{
    compute_f, holder_lower_bound_check, pointwise_bound_check, trace_from_rows, FunctionalTrace,
    InequalityReport, INEQUALITY_SLACK,
};
