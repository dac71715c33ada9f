use thiserror::Error;

/// Errors produced by the contour, subspace, codec, harness and assignment code.
#[derive(Debug, Error)]
pub enum LraError {
    /// A caller-supplied parameter is outside its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Input geometry cannot be used (too few distinct vertices, zero perimeter, non-finite).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Two objects that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An iterative routine produced a non-finite value or failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A persisted basis file failed validation.
    #[error("invalid basis file: {0}")]
    BasisFile(String),

    /// Malformed input data (JSON, JSONL, scenario files).
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LraError>;
