use std::io;

use thiserror::Error;

/// Errors produced by the solvers and their inputs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    /// A numerical contract was violated (factorization failure, residual
    /// above tolerance, non-finite values).
    #[error("numerical contract violated: {0}")]
    Numerical(String),
    #[error("malformed grid file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
