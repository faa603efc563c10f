use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{}:{row}: {message}", path.display())]
    Csv {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("split failed: {0}")]
    Split(String),

    #[error("{context}: matrix not positive definite after jitter escalation to {jitter:e}")]
    Factorization { context: &'static str, jitter: f64 },

    #[error(
        "dual solver did not converge in {iterations} iterations \
         (projected gradient norm {residual:e}, best dual value {best_value})"
    )]
    NotConverged {
        iterations: usize,
        residual: f64,
        best_value: f64,
        best_lambda: Vec<f64>,
    },

    #[error(
        "complexity U^2 = {u_squared:e} is negative beyond tolerance \
         (jitter {jitter:e}, correction trace {trace_correction:e})"
    )]
    NegativeComplexity {
        u_squared: f64,
        trace_correction: f64,
        jitter: f64,
    },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("config: line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
