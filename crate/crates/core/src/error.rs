use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A distribution violates its invariants (negative density, zero or
    /// non-finite mean, empty support, ...).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// Bad user-supplied configuration (out-of-range parameter, unknown
    /// key, inconsistent scenario).
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical routine failed to meet its tolerance or produced a
    /// non-normalizable intermediate.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The ODE integrator detected a conservation violation or a compartment
    /// undershoot beyond rounding level.
    #[error("integration error: {0}")]
    Integration(String),

    /// Two redundant computation routes disagree beyond tolerance.
    #[error("internal consistency error: {0}")]
    Inconsistency(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
