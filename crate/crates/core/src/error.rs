use thiserror::Error;

/// Errors produced by the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The background mesh is too coarse for the embedded geometry.
    #[error("under-resolved geometry: {0}")]
    Resolution(String),

    #[error("singular assembly: row {row} is empty after constraint application")]
    SingularAssembly { row: usize },

    /// Sparse or dense factorization broke down.
    #[error("solver failure: {message} (pivot {pivot})")]
    Solver { message: String, pivot: usize },

    /// The reduced saddle-point matrix is numerically singular.
    #[error("unstable reduced system: {0}")]
    Stability(String),

    #[error("full-order solve failed for sample {index} (mu = {mu:?}): {source}")]
    Sample {
        index: usize,
        mu: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("artifact mismatch: {0}")]
    ArtifactMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
