use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported matrix dimension {0} (expected 2, 3 or 4)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported spin label `{0}` (expected 1/2, 1 or 3/2)")]
    UnsupportedSpin(String),

    #[error("not Hermitian: max |M - M^dagger| = {residual:e}")]
    NotHermitian { residual: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not an Ermakov-Pinney solution: AB - C^2 misses 4/freq^2 by {defect:e}")]
    NotErmakovPinney { defect: f64 },

    #[error("singular trajectory: chi reached {value:e} at t = {t}")]
    SingularTrajectory { t: f64, value: f64 },

    #[error("negative chi: Dyson map undefined on the branch = -1 solution")]
    NegativeBranch,

    #[error("unsupported: {0}")]
    Unsupported(&'static str),

    #[error("null state: all coefficients vanish")]
    NullState,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
