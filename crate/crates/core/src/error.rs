use alloc::string::String;

/// Errors raised by the decomposition library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The r-th singular value of the data is below the numerical-rank threshold.
    #[error("ill-conditioned input: singular value #{index} = {value:e} is below threshold {threshold:e}")]
    IllConditioned {
        index: usize,
        value: f64,
        threshold: f64,
    },

    #[error("vector is not on the unit sphere (norm = {0})")]
    NotUnitNorm(f64),

    #[error("point is not critical: gradient norm {grad_norm:e} exceeds {tol:e}")]
    NotCritical { grad_norm: f64, tol: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! dim_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Dimension(alloc::format!($($arg)*))
    };
}

macro_rules! param_err {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidParameter(alloc::format!($($arg)*))
    };
}

pub(crate) use dim_err;
pub(crate) use param_err;
