use thiserror::Error;

/// Errors raised by the numerical operations of this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Sampled data is unusable (NaN, empty window, non-integrable samples).
    #[error("data error: {0}")]
    Data(String),

    /// The drift lacks a capability the operation needs (e.g. a gradient).
    #[error("capability error: {0}")]
    Capability(String),

    /// Explicit transport step would violate the CFL bound.
    #[error("CFL violation: max|b|*dt = {observed:.3e} exceeds {limit:.3e}; use dt <= {required_dt:.3e}")]
    Cfl {
        observed: f64,
        limit: f64,
        required_dt: f64,
    },

    /// A drift evaluation produced a non-finite value.
    #[error("non-finite drift value at t = {t}, x = {x:?}")]
    NonFinite { t: f64, x: Vec<f64> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
