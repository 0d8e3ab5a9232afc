use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of a closure (e.g. v ≤ 0).
    #[error("domain error: {0}")]
    Domain(String),
    /// A configuration or parameter set violates a model invariant.
    #[error("validation error: {0}")]
    Validation(String),
    /// A discretization is too coarse for the requested object.
    #[error("resolution error: {0}")]
    Resolution(String),
    /// The specific volume dropped below the positivity floor.
    #[error("blow-up at t={t:.6e}, x={x:.6e}: v={v:.6e}")]
    BlowUp { t: f64, x: f64, v: f64 },
    /// NaN or infinity appeared in a field.
    #[error("non-finite value at t={t:.6e}, node {node}")]
    NonFinite { t: f64, node: usize },
    /// Geometric ordering broke (crossed waves or partition midpoints).
    #[error("structural error: {0}")]
    Structural(String),
    /// An internal consistency check failed; indicates a bug.
    #[error("internal error: {0}")]
    Internal(String),
}
