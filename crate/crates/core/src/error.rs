use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("discriminator representation does not match kernel: {0}")]
    ModeMismatch(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("regularization is zero: no finite equilibrium discriminator")]
    ZeroRegularization,

    #[error(
        "point at distance {distance} from the expansion center exceeds admissible radius {radius}"
    )]
    OutsideExpansion { distance: f64, radius: f64 },

    #[error(
        "cannot place {count} unit vectors in dimension {dim} with pairwise cosine <= {delta} \
         (greedy packing found {found})"
    )]
    Packing {
        count: usize,
        dim: usize,
        delta: f64,
        found: usize,
    },

    #[error("line search stagnated: {0}")]
    LineSearch(String),

    #[error("no finite minimum found: {0}")]
    NoFiniteMinimum(String),

    #[error("no divergence velocity for these parameters: {0}")]
    NoDivergenceVelocity(String),

    #[error("eigenvalue iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
