use thiserror::Error;

/// Errors produced by densities, samplers and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A precondition on arguments or configuration was violated.
    #[error("usage error: {0}")]
    Usage(String),

    /// A log-density or gradient evaluation produced a non-finite value.
    #[error("non-finite value in {context} at trace {trace:?}")]
    NonFinite { context: String, trace: Vec<f64> },

    /// A sampler left the finite domain; the chain cannot continue.
    #[error("chain aborted at step {step}: {reason}")]
    ChainAborted { step: usize, reason: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn non_finite(context: impl Into<String>, trace: &[f64]) -> Self {
        Error::NonFinite {
            context: context.into(),
            trace: trace.to_vec(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
