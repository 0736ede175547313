use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{field}: {source}")]
    SpecField {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for bad input, 3 for numerical domain errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Eval(_) | Error::Sampling(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
