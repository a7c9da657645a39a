//! Experiment driver for `infoloss`: config parsing, analyses, randomized
//! suites and report rendering. The `infoloss` binary is a thin wrapper.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod suite;

pub use config::{ExperimentConfig, OutputFormat};
pub use error::{CliError, Result};
pub use experiment::{run_experiment, ExperimentReport, RunOptions};
pub use suite::{run_suite, SuiteName, SuiteOptions, SuiteReport};
