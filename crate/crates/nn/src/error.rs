use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("backward called without a cached forward pass in `{0}`")]
    MissingCache(&'static str),
}

pub type Result<T> = std::result::Result<T, NnError>;
