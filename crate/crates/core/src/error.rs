use thiserror::Error;

/// Errors raised while constructing or validating domain objects.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid solution: {0}")]
    InvalidSolution(String),
    #[error("infeasible assignment: {0}")]
    Infeasible(String),
    #[error("cut violates a cycle constraint; cycle edges {0:?}")]
    CycleViolation(Vec<usize>),
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("synthesis failed: {0}")]
    Synthesis(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
