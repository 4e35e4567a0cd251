use thiserror::Error;

/// Which of the three success-profile requirements was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileAxiom {
    /// Every entry must be a probability.
    UnitInterval,
    /// Entries below the channel count must be strictly positive.
    PositiveBelowCapacity,
    /// The entry at full occupancy must be exactly zero.
    ZeroAtCapacity,
}

impl std::fmt::Display for ProfileAxiom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProfileAxiom::UnitInterval => write!(f, "theta(b) must lie in [0, 1]"),
            ProfileAxiom::PositiveBelowCapacity => write!(f, "theta(b) must be positive for b < m"),
            ProfileAxiom::ZeroAtCapacity => write!(f, "theta(m) must equal 0"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid success profile at b={index} (value {value}): {axiom}")]
    ProfileAxiom {
        axiom: ProfileAxiom,
        index: usize,
        value: f64,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("index {index} out of range for {len} persistent users")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("ill-conditioned coefficient extraction: {0}")]
    Conditioning(String),

    #[error("outside oracle scope: {what} {estimate:.3e} exceeds limit {limit}")]
    OracleScope {
        what: &'static str,
        estimate: f64,
        limit: usize,
    },

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("scenario schema: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;
