use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("no header: input is empty")]
    NoHeader,

    #[error("ragged row {row}: expected {expected} cells, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("value `{value}` is not a known category of `{column}`")]
    UnseenCategory { column: String, value: String },

    #[error("count {0} falls outside every ordinal bin")]
    OrdinalOutOfRange(f64),

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    ParseNumber { row: usize, column: String, value: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("undefined R² (zero variance)")]
    UndefinedRSquared,

    #[error("no plausible price in response: {raw:?}")]
    Extraction { raw: String },

    #[error("transport error: {0}")]
    Transport(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
