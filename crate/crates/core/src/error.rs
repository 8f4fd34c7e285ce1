use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = WeldError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum WeldError {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bad magic in {path}: expected {expected:?}")]
    BadMagic { path: PathBuf, expected: &'static str },

    #[error("version mismatch in {path}: file has {found:?}, reader supports {supported:?}")]
    VersionMismatch {
        path: PathBuf,
        found: String,
        supported: &'static str,
    },

    #[error("truncated file {path}: {detail}")]
    Truncated { path: PathBuf, detail: String },

    #[error("malformed header: {0}")]
    Header(#[from] serde_json::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("numerical failure during {stage}: {detail}")]
    Numerical { stage: String, detail: String },

    #[error("solver blow-up at step {step}: {detail}")]
    BlowUp { step: usize, detail: String },
}

impl WeldError {
    pub fn shape(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        WeldError::Shape {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        WeldError::InvalidArgument(msg.into())
    }

    pub fn numerical(stage: impl Into<String>, detail: impl Into<String>) -> Self {
        WeldError::Numerical {
            stage: stage.into(),
            detail: detail.into(),
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            WeldError::InvalidArgument(_) => 2,
            WeldError::Numerical { .. } | WeldError::BlowUp { .. } => 4,
            _ => 3,
        }
    }
}
