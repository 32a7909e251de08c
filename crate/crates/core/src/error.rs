use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("shape mismatch in {op}: {details}")]
    ShapeMismatch { op: &'static str, details: String },

    #[error("loss node must be scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("line {line}: {message}")]
    BadRecord { line: usize, message: String },

    #[error("{0}")]
    InvalidInput(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("vocabulary fingerprint mismatch: checkpoint has {expected}, data yields {actual}")]
    FingerprintMismatch { expected: String, actual: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the error is caused by operator input (files, flags, data)
    /// rather than an internal bug. CLI maps these to exit code 2.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Parse { .. }
            | Error::BadRecord { .. }
            | Error::InvalidInput(_)
            | Error::Checkpoint(_)
            | Error::FingerprintMismatch { .. }
            | Error::Io(_)
            | Error::Json(_) => true,
            Error::ShapeMismatch { .. } | Error::NonScalarLoss(_) => false,
        }
    }
}
