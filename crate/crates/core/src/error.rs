use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric (relative defect {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("matrix is numerically singular at pivot {0}")]
    Singular(usize),

    #[error("nonpositive curvature {0:e} encountered; operator is not positive definite")]
    Indefinite(f64),

    #[error("no convergence to {tol:e} after {iterations} iterations (relative residual {achieved:e})")]
    MaxIterations {
        iterations: usize,
        achieved: f64,
        tol: f64,
    },

    #[error("Nitsche penalty too small: stiffness minimum eigenvalue is {0:e}")]
    PenaltyTooSmall(f64),

    #[error("point ({x}, {y}) cannot be located in the mesh")]
    Location { x: f64, y: f64 },

    #[error("assumption violated at k = {k}: {what}")]
    AssumptionViolated { k: usize, what: String },

    #[error("theory bound violated: {0}")]
    TheoryViolation(String),

    #[error("dense dimension {dim} exceeds the ceiling of {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Strips any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
