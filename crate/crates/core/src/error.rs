//! Error types shared across the pipeline stages.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by pipeline stages and their supporting operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Geometry that cannot be processed (zero area, collinear corners, ...).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Tensor shape or dtype does not match the expected contract.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An engine kind was registered twice.
    #[error("engine kind {0} is already registered")]
    DuplicateEngine(&'static str),

    /// The engine registry is empty.
    #[error("no inference engine available")]
    NoEngineAvailable,

    /// An inference engine failed to produce outputs.
    #[error("engine failure for model '{model}' (key {key}): {message}")]
    EngineFailure {
        model: String,
        key: String,
        message: String,
    },

    /// Invalid or incomplete configuration.
    #[error("config error at {location}: {message}")]
    ConfigError { location: String, message: String },

    /// Table structure tokens and detected cells disagree.
    #[error("table structure mismatch: {td_count} <td> slots but {cell_count} cells")]
    StructureMismatch { td_count: usize, cell_count: usize },

    /// Formula output rejected by validation; carries the raw backend text.
    #[error("invalid formula output ({reason})")]
    FormulaInvalid { reason: String, raw: String },

    /// Chart output rejected by validation; carries the raw backend text.
    #[error("invalid chart output ({reason})")]
    ChartInvalid { reason: String, raw: String },

    /// Embedding backend failed or produced inconsistent dimensions.
    #[error("embedder failure: {0}")]
    EmbedderFailure(String),

    /// A language-model or multimodal client call failed.
    #[error("client failure on {path} path: {message}")]
    ClientFailure { path: String, message: String },

    /// Answer key sets do not align.
    #[error("key mismatch: {0}")]
    KeyMismatch(String),

    /// A benchmark was run with zero cases.
    #[error("benchmark contains no cases")]
    EmptyBenchmark,

    /// Charset file could not be parsed.
    #[error("invalid charset: {0}")]
    InvalidCharset(String),

    /// Unsupported or unparseable input document.
    #[error("unsupported input: {0}")]
    UnsupportedInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Shorthand for a [`Error::ConfigError`] with a location.
    pub fn config(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigError {
            location: location.into(),
            message: message.into(),
        }
    }
}
