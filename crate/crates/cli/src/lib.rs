//! Configuration-driven experiment runner for the `dphase` solver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, Diagnostic, ExperimentConfig, LambdaMode, LambdaSpec};
pub use run::{run, CliError, Command, RunOptions, RunOutcome};
