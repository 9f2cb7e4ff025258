use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("y4m: {message} (at byte {offset})")]
    Y4m { offset: u64, message: String },

    #[error("pgm {path}: {message}")]
    Pgm { path: PathBuf, message: String },

    #[error("raw blob: {0}")]
    Blob(String),

    #[error("descriptor store: {0}")]
    Store(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("config: {0}")]
    Config(String),

    #[error("image directory {path}: {message}")]
    ImageDir { path: PathBuf, message: String },

    #[error("frame dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("vector dimension mismatch: {0} vs {1}")]
    VectorDimension(usize, usize),

    #[error("invalid hanning window size {0} (need at least 2 taps with non-zero weight)")]
    InvalidWindow(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty descriptor set for video {0}")]
    EmptyDescriptorSet(String),

    #[error("duplicate video id {0:?}")]
    DuplicateId(String),

    #[error("ground truth is empty")]
    EmptyGroundTruth,

    #[error("experiment cell {cell} failed: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Internal,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) | Error::InvalidWindow(_) => {
                ErrorClass::Usage
            }
            Error::Invariant(_) => ErrorClass::Internal,
            Error::Cell { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
