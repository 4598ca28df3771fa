use std::path::Path;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or parameter combinations. Exit code 1.
    #[error("{0}")]
    Usage(String),
    /// I/O, parse or data errors. Exit code 2.
    #[error("{0}")]
    Runtime(String),
    /// A verified bound failed on at least one trial. Exit code 3.
    #[error("{0}")]
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Violation(_) => 3,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {err}", path.display()))
    }
}

impl From<muss_core::Error> for CliError {
    fn from(e: muss_core::Error) -> Self {
        use muss_core::Error as E;
        match e {
            E::InvalidParam(_) | E::Precondition(_) | E::TooManySubsets { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
