use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("{role} controller has arity {actual:?}, expected {expected:?}")]
    Arity {
        role: String,
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("network expects {expected} inputs, got {actual}")]
    InputShape { expected: usize, actual: usize },

    #[error("cannot breed genomes of different arity: {a:?} vs {b:?}")]
    Breeding { a: (usize, usize), b: (usize, usize) },

    #[error("generation turnover failed: {0}")]
    Generation(String),

    #[error("cannot aggregate fitness over zero evaluations")]
    EmptyAggregate,

    #[error("missing genome for generation {generation}, role {role}")]
    Inventory { generation: usize, role: String },

    #[error("malformed file {path} at line {line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path} tick {tick}: {message}")]
    Violation {
        path: PathBuf,
        tick: u32,
        message: String,
    },

    #[error("run directory was created with config hash {expected}, got {actual}")]
    ResumeMismatch { expected: String, actual: String },

    #[error("run directory {0} is locked by another process")]
    Locked(PathBuf),

    #[error("a trial is already in progress")]
    TrialInProgress,

    #[error("no trial has finished yet")]
    NoTrials,

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Stable machine-readable code, printed as the prefix of CLI errors.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Config(_) => "E_CONFIG",
            Error::ConfigParse { .. } => "E_CONFIG_PARSE",
            Error::Arity { .. } => "E_ARITY",
            Error::InputShape { .. } => "E_INPUT_SHAPE",
            Error::Breeding { .. } => "E_BREEDING",
            Error::Generation(_) => "E_GENERATION",
            Error::EmptyAggregate => "E_AGGREGATE",
            Error::Inventory { .. } => "E_INVENTORY",
            Error::Malformed { .. } => "E_MALFORMED",
            Error::Violation { .. } => "E_VIOLATION",
            Error::ResumeMismatch { .. } => "E_RESUME_MISMATCH",
            Error::Locked(_) => "E_LOCKED",
            Error::TrialInProgress => "E_TRIAL_IN_PROGRESS",
            Error::NoTrials => "E_NO_TRIALS",
            Error::Protocol(_) => "E_PROTOCOL",
            Error::Io { .. } => "E_IO",
            Error::Json(_) => "E_JSON",
        }
    }
}
