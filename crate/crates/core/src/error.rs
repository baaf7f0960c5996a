use thiserror::Error;

use crate::elimination::RunReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("structural integrity violated: {0}")]
    Structure(String),

    #[error("instance integrity violated: {0}")]
    Integrity(String),

    #[error("query strategy error: {0}")]
    Strategy(String),

    /// A per-level candidate set became empty before acceptance.
    #[error("candidate set at level {level} exhausted after {} iterations", report.iterations.len())]
    Exhausted { level: usize, report: Box<RunReport> },

    /// The loop ran for `cap` iterations without terminating.
    #[error("iteration cap {cap} reached without acceptance")]
    IterationCap { cap: u64, report: Box<RunReport> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn structure(msg: impl Into<String>) -> Error {
    Error::Structure(msg.into())
}
