use std::path::PathBuf;

use crate::classify::ClassifyError;
use crate::consistency::ConsistencyError;
use crate::eval::EvalError;
use crate::prototype_bank::BankError;
use crate::synth::SynthError;
use crate::tensor_io::FormatError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification of failures, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Io,
    /// Malformed or inconsistent input data.
    Format,
    /// A numerical procedure could not produce a valid result.
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("{}: invalid JSON: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Bank(#[from] BankError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Consistency(#[from] ConsistencyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, source: FormatError) -> Self {
        Error::Format {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } => ErrorCategory::Io,
            Error::Format { .. } | Error::Json { .. } | Error::Eval(_) => ErrorCategory::Format,
            Error::Bank(e) => {
                if e.is_numeric() {
                    ErrorCategory::Numeric
                } else {
                    ErrorCategory::Format
                }
            }
            Error::Classify(e) => {
                if e.is_numeric() {
                    ErrorCategory::Numeric
                } else {
                    ErrorCategory::Format
                }
            }
            Error::Consistency(_) => ErrorCategory::Format,
            Error::Synth(e) => match e {
                SynthError::Infeasible { .. } => ErrorCategory::Numeric,
                SynthError::InvalidConfig(_) => ErrorCategory::Format,
            },
        }
    }
}
