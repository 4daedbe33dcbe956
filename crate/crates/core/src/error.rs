use thiserror::Error;

/// Errors raised across the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index {index} out of range for {len} rows")]
    Index { index: usize, len: usize },

    #[error("design error: {0}")]
    Design(String),

    #[error("identifiability violated: {0}")]
    Identifiability(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("semi-unitarity violated: {0}")]
    NotSemiUnitary(String),

    #[error("FIM singular, check identifiability ({0})")]
    SingularFim(String),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("unknown preset '{name}', expected one of: {valid}")]
    UnknownPreset { name: String, valid: String },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
