use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("invalid arguments: {0}")]
    Args(String),
    #[error(transparent)]
    Core(#[from] l4dec_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Format { path: path.into(), message: message.into() }
    }

    /// Process exit code: 1 for I/O, 2 for bad arguments, 3 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        use l4dec_core::Error as E;
        match self {
            CliError::Io { .. } | CliError::Format { .. } => 1,
            CliError::Args(_) => 2,
            CliError::Core(E::Dimension(_) | E::InvalidParameter(_) | E::Empty(_)) => 2,
            CliError::Core(_) => 3,
        }
    }
}
