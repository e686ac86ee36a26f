use std::io;
use std::path::{Path, PathBuf};

/// Failures of the file layer and the command line.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed or inconsistent input; exit code 2.
    #[error("{0}")]
    Input(String),

    #[error("{path}: {source}")]
    Read { path: PathBuf, source: io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },

    #[error(transparent)]
    Core(#[from] sctomo_core::Error),

    /// The result was written but the optimizer did not converge; exit code 3.
    #[error("reconstruction did not converge (result written)")]
    NotConverged,
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn read(path: &Path, source: io::Error) -> Self {
        CliError::Read {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn write(path: &Path, source: io::Error) -> Self {
        CliError::Write {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Read { .. } | CliError::Core(_) => 2,
            CliError::NotConverged => 3,
            CliError::Write { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
