use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid Choi matrix: {0}")]
    InvalidChoi(String),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error comes from the filesystem rather than from invalid input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
