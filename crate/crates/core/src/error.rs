use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    /// Fitted cumulative probabilities are not monotone, so at least one class
    /// probability is nonpositive.
    #[error("infeasible fitted probabilities{}", .observation.map(|i| format!(" at observation {}", i + 1)).unwrap_or_default())]
    Infeasible { observation: Option<usize> },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no penalized coefficients: every penalty factor is zero")]
    NoPenalizedCoefficients,

    #[error("degenerate coordinate {0}: zero curvature and zero ridge penalty")]
    DegenerateCoordinate(usize),
}

impl Error {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible { .. })
    }
}
