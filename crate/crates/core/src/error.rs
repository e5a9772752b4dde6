use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or experiment parameter is out of its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// Euler–Maruyama produced a non-finite position.
    #[error("non-finite position at step {step} (t = {time})")]
    NumericalFailure { step: u64, time: f64 },

    /// Population or event count exceeded the configured cap.
    #[error("explosion guard tripped: {what} reached {value} (cap {cap})")]
    Explosion { what: &'static str, value: u64, cap: u64 },

    #[error("observation step {delta} is not an integer multiple of dt = {dt}")]
    IncommensurateGrid { delta: f64, dt: f64 },

    #[error("cell partition is empty: edge length {edge} with delta = {delta} gives n = 0")]
    EmptyPartition { edge: f64, delta: f64 },

    #[error("estimation point {a} rejected: {reason}")]
    EstimationWindow { a: f64, reason: String },

    #[error("cell {cell} inside the kernel window is not filled")]
    UnfilledCell { cell: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("functional `{0}` was not accumulated")]
    MissingFunctional(String),

    #[error("config: {0}")]
    Config(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
