//! Configuration-driven runs of the dissipaton hierarchy: parsing, building,
//! propagation with CSV output and checkpoints, and oracle validation.

pub mod build;
pub mod config;
pub mod run;
pub mod validate;

use thiserror::Error;

pub use config::{parse_config, parse_config_str, parse_config_value, ConfigError, ConfigIssue, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    ConfigFile(#[from] ConfigError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical divergence: {0}")]
    Diverged(String),
    #[error("resource budget exceeded: {0}")]
    Budget(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigFile(ConfigError::Io { .. }) | CliError::Io { .. } => EXIT_IO,
            CliError::ConfigFile(_) | CliError::Config(_) => EXIT_CONFIG,
            CliError::Diverged(_) => EXIT_DIVERGED,
            CliError::Budget(_) => EXIT_BUDGET,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

/// Formats a double with 17 significant digits, enough to round-trip.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}
