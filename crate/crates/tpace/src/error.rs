//! Error type shared across the crate.
//!
//! Variants are grouped by how the CLI maps them to exit codes: parameter
//! and configuration problems are usage errors, malformed or degenerate
//! input is a data error, and failures inside a numerical procedure
//! (non-convergence, exhausted searches, exceeded draw caps) are numerical
//! failures.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter or configuration value is invalid.
    #[error("{0}")]
    Parameter(String),

    /// Input data is malformed or violates a structural invariant.
    #[error("{0}")]
    Data(String),

    /// A numerical procedure could not produce a usable result.
    #[error("{0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status the CLI reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) => 1,
            Error::Data(_) | Error::Io(_) => 2,
            Error::Numeric(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
