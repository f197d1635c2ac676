//! Experiment driver: configuration parsing, subcommand orchestration and
//! CSV output for the `parabolic_uzawa` library.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_config_str, ConfigError, ExperimentConfig};
pub use run::{run_subcommand, Report, RunError, Subcommand};
