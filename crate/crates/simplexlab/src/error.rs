use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain mismatch: {0}")]
    Domain(String),
    #[error("unsupported convention: {0}")]
    Unsupported(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("size cap exceeded: {need} entries, cap {cap}")]
    TooLarge { need: u128, cap: u128 },
    #[error("spectral constraint violated: {0}")]
    Spectral(String),
    #[error("argument too close to a pole: {0}")]
    Pole(String),
    #[error("io: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
