//! Configuration and command runner behind the `padlin` binary.

pub mod commands;
pub mod config;

pub use commands::{config_hash, run, Command, Outputs, RunError};
pub use config::{apply_override, load_config, parse_config, ConfigError, ExperimentConfig};
