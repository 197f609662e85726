use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cell {cell}: {reason}")]
    Format { cell: usize, reason: String },

    #[error("edge ({a}, {b}) is shared by {count} cells")]
    NonManifoldEdge { a: usize, b: usize, count: usize },

    #[error("cell {cell} has non-positive signed area {area:e}")]
    Orientation { cell: usize, area: f64 },

    #[error("edge ({a}, {b}) is traversed in the same direction by cells {first} and {second}")]
    InconsistentOrientation {
        a: usize,
        b: usize,
        first: usize,
        second: usize,
    },

    #[error("mesh generation failed at cell {cell}: {reason}")]
    Generation { cell: usize, reason: String },

    #[error("quadrature failed on cell {cell}: {reason}")]
    Quadrature { cell: usize, reason: String },

    #[error("degenerate geometry on cell {cell}: {reason}")]
    Geometry { cell: usize, reason: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("matrix is not positive definite: pivot {index} = {value:e}")]
    Factorization { index: usize, value: f64 },

    #[error("eigen-iteration did not converge after {iterations} steps; worst residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("expected exactly one zero mode, found {found}")]
    ZeroModeCount { found: usize },

    #[error("eigenvalue {0:e} belongs to the constant mode")]
    ZeroMode(f64),

    #[error("order fit failed: {reason}")]
    Fit { reason: String, trace: Vec<[f64; 3]> },

    #[error("{context}: {source}")]
    Level {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps an error with the experiment stage it came from.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Level {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
