use thiserror::Error;

/// Failures surfaced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("coordinate {index} = {value} lies outside [0,1]")]
    OutOfUnitCube { index: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("point lies on a non-smooth seam: {0}")]
    Seam(String),
    #[error("no sign change of F - 1/2 along the last axis at {0:?}")]
    NotOnLevelSet(Vec<f64>),
    #[error("level set of {0} is numerically empty")]
    EmptyLevelSet(String),
    #[error("level surface of {0} is not a graph over the first n-1 coordinates")]
    NotAGraph(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("covariance factorization of {model} at resolution {resolution} failed after jitter {jitter:e}")]
    Conditioning {
        model: String,
        resolution: usize,
        jitter: f64,
    },
    #[error("{0}")]
    Dispatch(String),
    #[error("cannot merge estimates: {0}")]
    Merge(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Dimension { .. }
                | Error::OutOfUnitCube { .. }
                | Error::Parameter(_)
                | Error::Dispatch(_)
                | Error::Unsupported(_)
                | Error::NotAGraph(_)
                | Error::Domain(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
