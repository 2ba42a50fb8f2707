//! Experiment harness for the highway simulator: config files, trace export,
//! batch orchestration, and the `cegt` command-line interface.

pub mod cli;
pub mod config;
pub mod export;
pub mod logging;
pub mod outputs;

pub use cli::{cli_main, CliError};
pub use config::{emit_effective, parse_config, ExperimentSpec, ParsedConfig, TraceFormat};
