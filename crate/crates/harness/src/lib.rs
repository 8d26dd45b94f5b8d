//! Experiment harness for the fedsim simulator: config files, sweeps,
//! result files, comparisons and synthetic data export.

pub mod compare;
pub mod config;
pub mod experiment;
pub mod gendata;

pub use compare::compare;
pub use config::{ExperimentConfig, Overrides};
pub use experiment::{run_experiment, RunSummary, Summary, RESULT_COLUMNS};
pub use gendata::gen_data;

use fedsim_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Stratification(_) => EXIT_CONFIG,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_RUNTIME,
    }
}
