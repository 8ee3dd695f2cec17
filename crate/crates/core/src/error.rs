use std::io;

use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid screen layout: {0}")]
    InvalidLayout(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("model scorer selected but no decision tree is loaded")]
    MissingModel,

    #[error("cannot build {k} equal-frequency bins: {reason}")]
    DegenerateBins { k: usize, reason: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("attribute {0} is not available on this row")]
    MissingAttribute(&'static str),

    #[error("malformed model file at line {line}: {msg}")]
    ModelFormat { line: usize, msg: String },

    #[error("malformed CSV at line {line}: {msg}")]
    CsvFormat { line: usize, msg: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown session {0}")]
    UnknownSession(String),

    #[error("operation not allowed in phase {phase}: {msg}")]
    WrongPhase { phase: &'static str, msg: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
