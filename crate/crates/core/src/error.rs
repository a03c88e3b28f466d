use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("pole: {0}")]
    Pole(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("chart mismatch: {0} vs {1}")]
    ChartMismatch(usize, usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("degenerate overlap: {0}")]
    DegenerateOverlap(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("quadrature did not converge: error estimate {estimate:.3e} after {cells} cells")]
    Quadrature { estimate: f64, cells: usize },
    #[error("clipping failure on simplex {simplex}: {msg}")]
    Clipping { simplex: String, msg: String },
    #[error("frame is singular at {0}")]
    SingularFrame(String),
    #[error("non-isolated singular set: {0}")]
    NonIsolated(String),
    #[error("field is not holomorphic: {0}")]
    NotHolomorphic(String),
    #[error("result is not close to an integer: {0}")]
    NotInteger(String),
    #[error("logarithmic term: {0}")]
    Logarithmic(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{0}")]
    Missing(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for bad input, 1 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::ChartMismatch(..)
            | Error::Dimension(_)
            | Error::DegenerateOverlap(_)
            | Error::Geometry(_)
            | Error::Invariant(_)
            | Error::Missing(_)
            | Error::Argument(_)
            | Error::NotHolomorphic(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
