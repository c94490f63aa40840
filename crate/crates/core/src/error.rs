use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("degenerate probe: no comparable pair found in {draws} draws")]
    DegenerateProbe { draws: usize },

    #[error("splitting not verified up to block length {m}")]
    Unverified { m: usize },

    #[error("pullback not converged after {n_max} steps (last diameter {last_diameter:e})")]
    NotConverged { n_max: usize, last_diameter: f64 },

    #[error("{failed} of {total} pullback samples did not converge")]
    TooManyFailures { failed: usize, total: usize },

    #[error("membership estimates are all zero from j = {j}")]
    AllZero { j: usize },

    #[error("degenerate diameter series: {usable} usable steps, need at least 5")]
    DegenerateSeries { usable: usize },

    #[error("Neumann series terms stopped decaying at j = {j}")]
    NoDecay { j: usize },

    #[error("martingale variance is not positive ({sigma2:e})")]
    NonPositive { sigma2: f64 },

    #[error("transport input mismatch: {0}")]
    WeightMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Outcomes where the hypotheses could not be confirmed, as opposed to
    /// malformed input or I/O failure.
    pub fn is_soft(&self) -> bool {
        matches!(
            self,
            Error::Unverified { .. }
                | Error::NotConverged { .. }
                | Error::TooManyFailures { .. }
                | Error::AllZero { .. }
                | Error::DegenerateSeries { .. }
                | Error::NoDecay { .. }
                | Error::NonPositive { .. }
                | Error::DegenerateProbe { .. }
        )
    }
}
