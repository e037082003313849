//! Experiment runner: TOML configuration, named experiments and
//! reproducible run directories.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod report;

pub use config::{parse_config, parse_config_str, Experiment, ExperimentConfig};
pub use error::CliError;
pub use experiments::run;
pub use report::{MetricRow, RunReport};
