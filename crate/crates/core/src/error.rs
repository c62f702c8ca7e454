use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function or distribution.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("validation error in {path}: {msg}")]
    Validation { path: PathBuf, msg: String },

    #[error("empty input: {0}")]
    Empty(String),

    /// Input that cannot support the requested computation, e.g. an empty tail.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Input errors (bad files, bad parameters, unusable data) as opposed to
    /// failures of the numerical machinery.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::InvalidParams(_)
                | Error::Parse { .. }
                | Error::Validation { .. }
                | Error::Empty(_)
                | Error::Degenerate(_)
                | Error::Io(_)
        )
    }
}
