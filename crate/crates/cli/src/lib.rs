//! Batch orchestration for the lattice gas: configuration parsing, replica
//! fan-out with deterministic seeding, and machine-readable outputs.

pub mod commands;
pub mod config;
pub mod io;
pub mod runner;

/// Command-level failures, split by exit code: validation problems exit
/// with 2, runtime failures with 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn validation(err: impl std::fmt::Display) -> Self {
        CliError::Validation(err.to_string())
    }

    pub fn runtime(err: impl std::fmt::Display) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
