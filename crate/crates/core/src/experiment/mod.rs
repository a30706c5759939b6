//! Batch experiments: test functions, distribution functions, weak-(1,1)
//! sweeps, JSON configs and the runner behind the CLI.

pub mod config;
pub mod functions;
pub mod runner;
pub mod weak;

pub use config::{Experiment, ExperimentConfig};
pub use runner::{run_config, run_experiment, RunOutcome};
pub use weak::{distribution_function, weak11_sweep, TestFamily, Weak11Params, Weak11Report, Weak11Row};
