use std::path::PathBuf;

use thiserror::Error;

use crate::format::FormatError;

/// Process exit status for a successful run.
pub const EXIT_OK: u8 = 0;
/// Exit status for invalid input, configuration or file contents.
pub const EXIT_VALIDATION: u8 = 1;
/// Exit status for failures reading or writing files.
pub const EXIT_IO: u8 = 2;
/// Exit status for numerical failures inside the solvers.
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] ucal_core::Error),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON output: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit status matching the error category.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Io { .. } | Error::Csv(_) | Error::Json(_) => EXIT_IO,
            Error::Format { .. } | Error::Config(_) => EXIT_VALIDATION,
            Error::Core(ucal_core::Error::ZeroSignal(_)) | Error::Numerical(_) => EXIT_NUMERICAL,
            Error::Core(_) => EXIT_VALIDATION,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
