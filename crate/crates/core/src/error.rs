use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("matrix is zero; effective rank undefined")]
    DegenerateMatrix,
    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("family {0} is not sub-Gaussian")]
    NotSubGaussian(String),
    #[error("family {0} is not sub-exponential")]
    NotSubExponential(String),
    #[error("moment of order {order} does not exist for {family}")]
    MomentDoesNotExist { family: String, order: u32 },
    #[error("rho puts mass {rho:e} on point {index} where mu has none")]
    NotAbsolutelyContinuous { index: usize, rho: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
