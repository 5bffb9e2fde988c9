use thiserror::Error;

/// Errors produced by the team selection library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("no rounds")]
    NoRounds,

    #[error("empty team")]
    EmptyTeam,

    #[error("expert index {index} out of range for {n} experts")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("duplicate expert index {0} in team")]
    DuplicateMember(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("team size {m} out of range [{min}, {n}]")]
    TeamSize { m: usize, min: usize, n: usize },

    #[error("matrix not PSD (curvature {curvature:e})")]
    NotPsd { curvature: f64 },

    #[error("relaxed solution did not converge (gap {gap:e} after {iterations} iterations)")]
    Unconverged { gap: f64, iterations: usize },

    #[error("{combinations} combinations exceed the enumeration cap {cap}; use tabu search instead")]
    EnumerationCap { combinations: u128, cap: u128 },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("insufficient rounds: need {needed}, have {available}")]
    InsufficientRounds { needed: usize, available: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
