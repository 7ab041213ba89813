use thiserror::Error;

/// Errors produced by fitting, rescoring, evaluation, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid GPD parameters: shape={shape}, scale={scale} (need shape <= 0, scale > 0)")]
    InvalidParams { shape: f64, scale: f64 },

    #[error("invalid excess sample: {0}")]
    InvalidSample(String),

    #[error("sample of size {got} is below the minimum fit size {need}")]
    InsufficientData { got: usize, need: usize },

    #[error("degenerate sample: every excess value is zero")]
    DegenerateSample,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
