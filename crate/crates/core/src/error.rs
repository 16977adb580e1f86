use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input too small: {0}")]
    InputTooSmall(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate neighborhood at point {point}: all neighbor displacements are zero")]
    DegenerateNeighborhood { point: usize },

    #[error("degenerate triangle: zero-area normal")]
    DegenerateTriangle,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("numeric failure in {stage}: non-finite values")]
    NumericFailure { stage: String },

    #[error("loss undefined: every entry is masked")]
    UndefinedLoss,

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("training diverged at step {step}: loss is not finite")]
    TrainingFailure { step: usize },

    #[error("invalid mesh spec: {0}")]
    InvalidSpec(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("unknown config key `{key}`; valid keys: {valid}")]
    UnknownKey { key: String, valid: String },

    #[error("config value out of range: {0}")]
    Range(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse_at_byte(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            location: format!("byte {offset}"),
            message: message.into(),
        }
    }

    pub(crate) fn parse_at_line(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            location: format!("line {line}"),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn numeric(stage: impl Into<String>) -> Self {
        Error::NumericFailure {
            stage: stage.into(),
        }
    }
}
