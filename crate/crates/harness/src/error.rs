use std::path::PathBuf;

use rculmc_core::Error as CoreError;
use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

/// Failures of the harness, split by the exit status they map to.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl HarnessError {
    /// `1` for usage and configuration problems, `2` for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Numerical(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        HarnessError::Csv {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// A core error raised while building targets and samplers from a config.
    pub(crate) fn setup(e: CoreError) -> Self {
        HarnessError::Config(e.to_string())
    }

    /// A core error raised while a chain or oracle was running. Refusals
    /// (inadmissible or out-of-hypothesis parameters) stay config errors.
    pub(crate) fn running(e: CoreError) -> Self {
        match e {
            CoreError::Inadmissible { .. } | CoreError::HypothesisViolated(_) => {
                HarnessError::Config(e.to_string())
            }
            _ => HarnessError::Numerical(e.to_string()),
        }
    }
}
