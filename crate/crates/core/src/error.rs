use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,
    #[error("open surface: {0}")]
    OpenSurface(String),
    #[error("grid too large: {cells} cells exceeds budget of {budget}")]
    GridTooLarge { cells: u64, budget: u64 },
    #[error("underdetermined: need at least 3 correspondences, got {0}")]
    Underdetermined(usize),
    #[error("degenerate correspondences")]
    DegenerateCorrespondences,
    #[error("singular linear part")]
    SingularLinearPart,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("template generation failed: {0}")]
    TemplateGeneration(String),
    #[error("no interaction detected")]
    NoInteraction,
    #[error("no object-only reference frame outside the interaction period")]
    NoReferenceFrame,
    #[error("no valid frames")]
    NoValidFrames,
    #[error("diverged at iteration {iteration}")]
    Diverged { iteration: usize, trace: Vec<f64> },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), msg: msg.into() }
    }
}
