use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The input violates a documented precondition or invariant.
    #[error("invalid input: {field}: {message}")]
    Input { field: String, message: String },

    /// A textual input could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A state or enumeration ceiling was exceeded.
    #[error("resource limit exceeded at phase {phase}: {count} > {ceiling}")]
    Resource {
        phase: usize,
        count: u128,
        ceiling: u128,
    },

    /// Decomposition, layout and state space disagree with each other.
    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Input {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
