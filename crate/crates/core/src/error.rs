use thiserror::Error;

use crate::solver::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("rejected snapshot: {0}")]
    RejectedSnapshot(String),

    #[error("rejected scenario: {0}")]
    RejectedScenario(String),

    #[error("{model} solve ended with status {status:?}")]
    Solve { model: String, status: SolveStatus },

    #[error("period {period}: {source}")]
    Period { period: usize, source: Box<Error> },

    #[error("solution failed its feasibility re-check (max violation {violation:e})")]
    Certificate { violation: f64 },

    #[error("schema error in {path}: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
