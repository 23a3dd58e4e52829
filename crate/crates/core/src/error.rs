use thiserror::Error;

/// Errors raised across the library.
///
/// The variants map onto the process exit codes used by the command-line
/// driver (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("time {time} is not a node of the path grid")]
    Query { time: f64 },

    #[error("integral diverges: {0}")]
    Divergence(String),

    #[error("numerical failure at step {step}: {context}")]
    Numeric { step: usize, context: String },

    #[error("missing capability: {0}")]
    Capability(String),

    #[error("insufficient coverage: {0}")]
    Coverage(String),

    #[error("fixed-point iteration failed to contract after {iterations} iterations (last rate estimate {rate:.4})")]
    ContractionFailure { iterations: usize, rate: f64 },

    #[error("lambda search failed: {0}")]
    SearchFailure(String),

    #[error("invalid configuration at `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 validation, 3 numeric failure, 4 capability error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSpec(_) | Error::Validation { .. } | Error::Parse(_) | Error::Query { .. } => 2,
            Error::Capability(_) => 4,
            Error::Io(_) => 1,
            Error::Divergence(_)
            | Error::Numeric { .. }
            | Error::Coverage(_)
            | Error::ContractionFailure { .. }
            | Error::SearchFailure(_) => 3,
        }
    }
}
