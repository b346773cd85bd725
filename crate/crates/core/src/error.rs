//! Crate-wide error type and exit-code categories.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("unknown {kind} tag: {value}")]
    UnknownTag { kind: &'static str, value: String },

    #[error("schedule thresholds must be strictly increasing: {prev} then {next}")]
    ScheduleOrder { prev: f64, next: f64 },

    #[error("oracle validation failed: {0}")]
    Oracle(String),

    #[error("missing prerequisite artifact: {0}")]
    MissingPrerequisite(String),

    #[error("training aborted: {0}")]
    TrainingAbort(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable exit-code category for the CLI: 2 = config/validation,
    /// 3 = I/O or serialization, 4 = missing prerequisite, 5 = numeric abort,
    /// 6 = parse error.
    pub fn category(&self) -> i32 {
        match self {
            Error::ShapeMismatch { .. }
            | Error::Invalid { .. }
            | Error::EmptyInput(_)
            | Error::InsufficientSamples { .. }
            | Error::UnknownTag { .. }
            | Error::ScheduleOrder { .. }
            | Error::Oracle(_) => 2,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 3,
            Error::MissingPrerequisite(_) => 4,
            Error::NonFinite(_) | Error::TrainingAbort(_) => 5,
            Error::Parse(_) => 6,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
