use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
}

pub type Result<T> = std::result::Result<T, Error>;
