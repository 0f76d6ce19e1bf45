use thiserror::Error;

/// Errors raised by dataset validation, solvers, and the numerics layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("cluster {0} has no samples")]
    EmptyCluster(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Input matrix has linearly dependent columns where full column rank is required.
    #[error("rank-deficient input: rank {rank} < {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    /// Within-cluster scatter cannot be inverted as-is.
    #[error("within-cluster scatter matrix is singular; refit with a regularization lambda > 0")]
    SingularWithinScatter,

    /// A decomposition failed or produced values outside its contract.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of the numerics itself rather than of input validation.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
