use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("negative count at ({row}, {col})")]
    NegativeCount { row: usize, col: usize },

    #[error("counts sum to {sum} which exceeds frames = {frames}")]
    CountsExceedFrames { sum: u64, frames: u64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("moment order {needed} required but table has order {available}")]
    InsufficientOrder { needed: usize, available: usize },

    #[error("moment order {0} exceeds the configured maximum {1}")]
    OrderTooLarge(usize, usize),

    #[error("criterion {0} is not violated at s = 1")]
    NotViolated(String),

    #[error("criterion {0} cannot be evaluated: {1}")]
    Unevaluable(String, String),

    #[error("tail mass {mass:e} beyond the grid exceeds {limit:e}")]
    TailMass { mass: f64, limit: f64 },

    #[error("POVM completeness violated: column {n} sums to {sum}")]
    Completeness { n: usize, sum: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("identity check failed: {0}")]
    Identity(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::Completeness { .. } | Error::TailMass { .. } => 3,
            _ => 2,
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
