use std::io;

/// Errors produced anywhere in the CSI compression and sensing pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("format error: {0}")]
    Format(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("subcarrier mask selects nothing")]
    EmptySelection,

    #[error("empty result: {0}")]
    EmptyResult(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("index {index} out of range (limit {limit})")]
    Range { index: usize, limit: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("labels are degenerate: {0}")]
    DegenerateLabels(String),

    #[error("training diverged at epoch {epoch}: {reason}")]
    Training { epoch: usize, reason: String },
}

impl Error {
    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

impl Error {
    /// A copy of the error; I/O errors keep their kind and message.
    pub(crate) fn duplicate(&self) -> Self {
        match self {
            Error::Io(e) => Error::Io(io::Error::new(e.kind(), e.to_string())),
            Error::Format(m) => Error::Format(m.clone()),
            Error::Shape(m) => Error::Shape(m.clone()),
            Error::EmptySelection => Error::EmptySelection,
            Error::EmptyResult(m) => Error::EmptyResult(m.clone()),
            Error::Config(m) => Error::Config(m.clone()),
            Error::Range { index, limit } => Error::Range { index: *index, limit: *limit },
            Error::InsufficientData(m) => Error::InsufficientData(m.clone()),
            Error::DegenerateLabels(m) => Error::DegenerateLabels(m.clone()),
            Error::Training { epoch, reason } => Error::Training { epoch: *epoch, reason: reason.clone() },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
