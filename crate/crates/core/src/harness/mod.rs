//! Experiment orchestration: configuration, sweeps, fits and outputs.

pub mod config;
pub mod fit;
pub mod output;
pub mod records;
pub mod sweep;

pub use config::{ExperimentConfig, SolverChoice};
pub use fit::{
    compare_with_theory, fit_exponent, fit_windows, FitModel, ScalingFit, TheoryVerdict,
};
pub use output::{emit_outputs, OutputPaths};
pub use records::{read_records, write_records, BlowupTime, LifespanRecord, RunStatus};
pub use sweep::{run_sweep, surrogate_for};
