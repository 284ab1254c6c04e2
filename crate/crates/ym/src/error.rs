use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the command-line tool.
#[derive(Debug, Error)]
pub enum CliError {
    /// Spec or flag problems found before any computation.
    #[error("{0}")]
    Input(String),
    #[error("invalid function spec: {0}")]
    Spec(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] ym_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 1 for parse or validation failures, 2 for numerical failures, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        use ym_core::Error as E;
        match self {
            CliError::Input(_) | CliError::Spec(_) => 1,
            CliError::Io { .. } => 3,
            CliError::Core(e) => match e {
                E::Eval(_)
                | E::NotCovered
                | E::OutsideImage { .. }
                | E::DerivativeTooSmall { .. }
                | E::InvalidGrid(_)
                | E::GridTooSmall { .. }
                | E::InvalidMeasure(_)
                | E::NoCoverage
                | E::TooManyFailures { .. } => 2,
                _ => 1,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
