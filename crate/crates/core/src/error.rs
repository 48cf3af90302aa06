use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested closed form does not apply to this user count.
    #[error("{operation} requires {requirement}; use {use_instead} instead")]
    Dispatch {
        operation: &'static str,
        requirement: &'static str,
        use_instead: &'static str,
    },

    #[error("numerical range error: {0}")]
    NumericalRange(String),

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("internal consistency error: {0}")]
    Inconsistent(String),
}
