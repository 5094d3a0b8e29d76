//! Reference models for simulation-based calibration checking: a bivariate
//! normal with broken posteriors, an analytically tractable Bernoulli model,
//! and an ordered-simplex model sampled by Metropolis.

pub mod bernoulli;
pub mod gaussian;
pub mod simplex;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown variant `{name}`; valid: {valid}")]
    UnknownVariant { name: String, valid: String },
    #[error("unknown quantity `{name}`; valid: {valid}")]
    UnknownQuantity { name: String, valid: String },
    #[error("quantity `{quantity}` is not available for variant `{variant}`")]
    UnsupportedQuantity { quantity: String, variant: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid posterior family: {0}")]
    InvalidFamily(String),
}
