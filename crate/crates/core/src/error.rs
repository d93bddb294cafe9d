use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Arguments outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("catalog line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid transition {transition}: {message}")]
    InvalidTransition { transition: String, message: String },

    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),

    #[error("unknown state {0}: no catalog line couples to it")]
    UnknownState(String),

    #[error("trap laser resonant with catalog line {0}")]
    Resonance(String),

    #[error("level below trap minimum: |U| = {level:e} J exceeds depth {depth:e} J")]
    LevelBelowTrapMinimum { level: f64, depth: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("image format: {0}")]
    ImageFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
