use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("insufficient length: need more than {needed} samples, got {got}")]
    InsufficientLength { needed: usize, got: usize },

    #[error("non-finite value at sample {row}, coordinate {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unstable AR dynamics: companion spectral radius {radius:.6} >= 1")]
    Unstable { radius: f64 },

    #[error("ill-conditioned regressor at AR order {order} (condition number {condition:.3e})")]
    IllConditioned { order: usize, condition: f64 },

    #[error("covariance is not positive semidefinite: eigenvalue {eigenvalue:.3e} at index {index}")]
    Conditioning { index: usize, eigenvalue: f64 },

    #[error("input is not white: max |cov - I| = {deviation:.3e}")]
    NotWhite { deviation: f64 },

    #[error("ICA did not converge within {sweeps} sweeps (last change {last_change:.3e})")]
    NoConvergence {
        sweeps: usize,
        last_change: f64,
        log: Vec<f64>,
    },

    #[error("coordinate {index} is degenerate (constant)")]
    DegenerateCoordinate { index: usize },

    #[error("graph has {} connected components, more than the allowed {max}: {components:?}", components.len())]
    TooManyComponents { max: usize, components: Vec<Vec<usize>> },

    #[error("block {axis} {index} of the global transform is all zero")]
    DegenerateBlock { axis: &'static str, index: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("no ground truth available: {0}")]
    NoGroundTruth(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
