use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematically admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-side contract was violated (mismatched grids, asymmetric
    /// covariance, degenerate input, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numerical procedure failed to converge or produced non-finite
    /// values; the message carries diagnostics.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
