//! Experiment front end: configuration, execution and CSV output.

mod config;
mod csv;
mod run;
pub mod selftest;

pub use config::{
    parse_args, parse_config, Command, ConvergenceParams, ExperimentConfig, ExperimentKind,
    GridworldParams, SelftestParams,
};
pub use csv::{format_csv, write_csv, CSV_HEADER};
pub use run::{final_errors, run_convergence, run_experiment, run_gridworld};
