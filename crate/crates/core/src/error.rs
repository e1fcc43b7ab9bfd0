use thiserror::Error;

/// Errors produced by the analysis engine.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid pair: an entity cannot be paired with itself ({0})")]
    InvalidPair(String),

    #[error("unknown entity `{0}`")]
    UnknownEntity(String),

    #[error("invalid interval: start {start} is after end {end}")]
    InvalidInterval { start: f64, end: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("episode [{start}, {end}] contains no events")]
    EmptyEpisode { start: f64, end: f64 },

    #[error("training set needs at least one positive and one negative example")]
    NeedsBothClasses,

    #[error("training set is empty")]
    EmptyTraining,

    #[error("cannot combine an empty list of models")]
    EmptyCombination,

    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl EngineError {
    /// Stable machine-readable code, used by the HTTP API and CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::InvalidPair(_) => "invalid_pair",
            EngineError::UnknownEntity(_) => "unknown_entity",
            EngineError::InvalidInterval { .. } => "invalid_interval",
            EngineError::InvalidParameter(_) => "invalid_parameter",
            EngineError::Parse { .. } => "parse_error",
            EngineError::EmptyEpisode { .. } => "empty_episode",
            EngineError::NeedsBothClasses => "needs_both_classes",
            EngineError::EmptyTraining => "empty_training",
            EngineError::EmptyCombination => "empty_combination",
            EngineError::UnsupportedVersion(_) => "unsupported_version",
            EngineError::Io(_) => "io_error",
            EngineError::Json(_) => "json_error",
            EngineError::Csv(_) => "csv_error",
        }
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;
