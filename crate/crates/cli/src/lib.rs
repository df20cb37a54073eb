//! Batch front-end for the `thinfilm` crate: configuration files, presets
//! and plot-ready outputs.

pub mod config;
pub mod execute;
pub mod output;

pub use config::{load_config, parse_config, parse_config_with, ConfigError, Mode, RunConfig};
pub use execute::{execute, ExecError, Execution, EXIT_CONFIG, EXIT_NUMERICAL};
