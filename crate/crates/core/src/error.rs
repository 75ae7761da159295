//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain where the requested quantity is
    /// defined (e.g. a moment that does not exist, b outside (0, p)).
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    /// Vector lengths disagree with the declared dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An operation needed a residual vector U but the model or call site
    /// provided none (k = 0).
    #[error("missing residual vector: {0}")]
    MissingResidual(String),

    /// A density value underflowed to the point where a ratio of integrals
    /// against it is meaningless.
    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    /// Monte Carlo output was invalidated (e.g. too many skipped rows).
    #[error("invalid Monte Carlo result: {0}")]
    InvalidMonteCarlo(String),

    /// Configuration validation failures; one message per violation.
    #[error("invalid config:\n{}", .0.join("\n"))]
    ConfigValidation(Vec<String>),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
