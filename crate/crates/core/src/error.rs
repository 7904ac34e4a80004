use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("cutoff {0} outside (0, 0.5]")]
    Cutoff(f64),
    #[error("kernel length {0} must be odd and positive")]
    KernelLength(usize),
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("infeasible request: {0}")]
    Infeasible(String),
    #[error("inverse transform is not real (imaginary residue {0:e})")]
    NotReal(f64),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
