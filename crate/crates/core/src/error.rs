use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numerical operation was asked to leave its domain of validity, e.g.
    /// a logarithm outside the principal-branch radius.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("value {0} outside [0, 1]")]
    Range(f64),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("context mismatch: {0} vs {1}")]
    ContextMismatch(String, String),
}
