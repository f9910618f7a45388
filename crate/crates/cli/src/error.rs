use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    /// Rejected plan document. Maps to exit code 1.
    #[error("invalid plan: {0}")]
    Plan(String),

    #[error(transparent)]
    Core(#[from] saea_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    /// Malformed or incomplete result directory.
    #[error("{0}")]
    Data(String),
}

impl LabError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        LabError::Csv {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Plan(_) => 1,
            _ => 2,
        }
    }
}

pub type LabResult<T> = std::result::Result<T, LabError>;
