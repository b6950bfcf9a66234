use alloc::string::String;
use thiserror::Error;

/// Errors raised by the numerical operations of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("not Hermitian (defect {0:e})")]
    NotHermitian(f64),

    #[error("not positive semidefinite (eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("function undefined at eigenvalue {0:e}")]
    Undefined(f64),

    #[error("reference functional is not faithful")]
    NotFaithful,

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("ill-conditioned: residual {residual:e} exceeds {bound:e}")]
    Conditioning { residual: f64, bound: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
