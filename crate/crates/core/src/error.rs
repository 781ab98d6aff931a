use thiserror::Error;

/// Errors produced by estimation, solving and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or non-finite input values.
    #[error("input error: {0}")]
    Input(String),
    /// Invalid parameter or combination of options.
    #[error("config error: {0}")]
    Config(String),
    /// Data inconsistent with the requested model (e.g. samples outside the support).
    #[error("domain error: {0}")]
    Domain(String),
    /// A root search failed to converge.
    #[error("numeric error: {message} (iterations {iterations}, bracket [{lo}, {hi}], residual {residual:e})")]
    Numeric {
        message: String,
        iterations: usize,
        lo: f64,
        hi: f64,
        residual: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
