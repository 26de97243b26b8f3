use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative decomposition failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An index is not resolved by the dyadic grid.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A frequency would alias on the discrete circle.
    #[error("alias error: {0}")]
    Alias(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The coefficient vanishing hypothesis of a construction fails.
    /// `offending` lists every index whose coefficient is too large.
    #[error("hypothesis violated ({what}) at indices {offending:?}")]
    Hypothesis { what: String, offending: Vec<i64> },

    #[error("lacunarity violated: {0}")]
    Lacunarity(String),

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("invalid instance: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_hypothesis(&self) -> bool {
        matches!(self, Error::Hypothesis { .. } | Error::Lacunarity(_))
    }
}
