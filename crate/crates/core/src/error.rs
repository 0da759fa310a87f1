use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("line {line}: {message}")]
    ParseAt { line: usize, message: String },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid probability function: {0}")]
    InvalidProbability(String),
    #[error("incompatible input: {0}")]
    Incompatible(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("predicate is not monotone on the family range: {0}")]
    NonMonotone(String),
    /// A computed witness or certificate failed independent re-verification.
    #[error("verification failed: {0}")]
    Verification(String),
}
