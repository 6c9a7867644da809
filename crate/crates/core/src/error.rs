use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {split} split at {path}: {reason}")]
    MissingSplit {
        split: String,
        path: PathBuf,
        reason: String,
    },

    #[error("malformed {split} data at {path}: {reason}")]
    MalformedData {
        split: String,
        path: PathBuf,
        reason: String,
    },

    #[error("unknown label {token:?} for row {row_id}")]
    UnknownLabel { row_id: String, token: String },

    #[error("duplicate id {id} in {split} split")]
    DuplicateId { split: String, id: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("training diverged: non-finite loss at step {step}")]
    Divergence { step: usize },

    #[error("non-finite gradient during attribution at step {step}")]
    NonFiniteGradient { step: usize },

    #[error("pretrained encoder {encoder_id:?} not obtainable: {reason}")]
    CheckpointUnavailable { encoder_id: String, reason: String },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("refusing to overwrite existing record {}", path.display())]
    Collision { path: PathBuf },

    #[error("no run records found in {}", dir.display())]
    NoRecords { dir: PathBuf },

    #[error("partial results: {completed} of {total} runs finished before failure ({source}); manifest at {}", manifest.display())]
    Partial {
        completed: usize,
        total: usize,
        manifest: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("plot rendering failed: {0}")]
    Plot(String),

    #[error(transparent)]
    Tensor(#[from] candle_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-parsable category, one per exit code.
    pub fn category(&self) -> &'static str {
        match self {
            Error::MissingSplit { .. }
            | Error::MalformedData { .. }
            | Error::UnknownLabel { .. }
            | Error::DuplicateId { .. } => "ingestion",
            Error::Argument(_) => "argument",
            Error::Divergence { .. } => "divergence",
            Error::NonFiniteGradient { .. } => "numeric",
            Error::CheckpointUnavailable { .. } => "checkpoint",
            Error::Config { .. } | Error::Json(_) => "config",
            Error::Collision { .. } => "collision",
            Error::NoRecords { .. } => "no-records",
            Error::Partial { .. } => "partial",
            Error::Plot(_) => "report",
            Error::Tensor(_) => "tensor",
            Error::Csv(_) | Error::Io(_) => "io",
        }
    }

    /// Process exit status for this error. Documented in the README; 2 is
    /// left to clap for usage errors.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "ingestion" => 3,
            "argument" => 4,
            "config" => 5,
            "divergence" => 6,
            "numeric" => 7,
            "checkpoint" => 8,
            "collision" => 9,
            "no-records" => 10,
            "partial" => 11,
            "report" => 12,
            "tensor" => 13,
            "io" => 14,
            _ => 1,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}

/// Every category paired with its exit code, in code order.
pub const EXIT_CODES: &[(&str, i32)] = &[
    ("ingestion", 3),
    ("argument", 4),
    ("config", 5),
    ("divergence", 6),
    ("numeric", 7),
    ("checkpoint", 8),
    ("collision", 9),
    ("no-records", 10),
    ("partial", 11),
    ("report", 12),
    ("tensor", 13),
    ("io", 14),
];
