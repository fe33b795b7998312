//! Library backing the `igpr` experiment harness binary.

pub mod bundle;
pub mod config;
pub mod report;
pub mod runner;

use thiserror::Error;

/// Errors with exit-code categories: config -> 2, model -> 3, numerical -> 4,
/// anything else -> 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}
