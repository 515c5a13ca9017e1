use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coefficient `{name}` is not evaluable at {at}")]
    NonEvaluable { name: String, at: f64 },

    #[error("quadrature failed: derivative of `{name}` is {value:e} < 0 at node {node}")]
    Quadrature { name: String, node: f64, value: f64 },

    #[error("scheme became unstable at t = {time} (path {path_index})")]
    Instability { time: f64, path_index: u64 },

    #[error("path was not stored at every step; {0} needs the full trajectory")]
    NeedsEveryStep(&'static str),

    #[error("entropy bound mismatch: |beta'| <= {triple_bound} but the measure uses K = {measure_bound}")]
    BoundMismatch { triple_bound: f64, measure_bound: f64 },

    #[error("entropy has beta'(0) = {0}; the jump terms require a zero slope at the origin")]
    NonzeroSlopeAtOrigin(f64),

    #[error("entropy is not convex: beta''({at}) = {value:e}")]
    NotConvex { at: f64, value: f64 },

    #[error("test function support reaches the boundary ring of the box")]
    SupportTouchesBoundary,

    #[error("no level reached the first dissipation threshold {threshold:e}; extend the level range")]
    InsufficientLevels { threshold: f64 },

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalog(String),

    #[error("unknown recipe `{0}`")]
    UnknownRecipe(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("snapshot parse error: {0}")]
    Snapshot(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
