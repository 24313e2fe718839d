use thiserror::Error;

use crate::models::ModelId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("MAPE undefined: every target is below the zero guard")]
    MapeUndefined,

    #[error("insufficient length: need {needed}, got {got}")]
    InsufficientLength { needed: usize, got: usize },

    #[error("series contains missing values at {count} positions")]
    MissingValues { count: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("every point is flagged; nothing to repair from")]
    AllFlagged,

    #[error("series has no observed values")]
    AllMissing,

    #[error("degenerate series: {0}")]
    Degenerate(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("model {model} failed: {reason}")]
    ModelFailure { model: ModelId, reason: String },

    #[error("no model produced a usable validation forecast")]
    NoSuccessfulModels,

    #[error("trimming {trimmed} from each side leaves nothing of {k} members")]
    TrimTooLarge { trimmed: usize, k: usize },

    #[error("insufficient data quality: {missing_pct:.1}% missing")]
    InsufficientQuality { missing_pct: f64 },

    #[error("weights cover {weights} models but {members} forecasts were given")]
    MemberMismatch { weights: usize, members: usize },

    #[error("log sequence regression: {got} after {last}")]
    SequenceRegression { last: u64, got: u64 },

    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("config: {0}")]
    Config(String),

    #[error("advisor: {0}")]
    Advisor(String),

    #[error("report: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
