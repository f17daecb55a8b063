//! Dimension-free concentration of sample covariance matrices and moment
//! tensors: samplers, estimators, closed-form bounds and a Monte Carlo harness
//! that checks the bounds against simulated data.

pub mod bounds;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod linalg;
pub mod numeric;
pub mod tensor;
pub mod variational;

pub use error::{Error, Result};
