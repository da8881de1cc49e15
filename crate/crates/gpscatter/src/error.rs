use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum GpError {
    /// Invalid grid construction parameters.
    #[error("grid: {0}")]
    Grid(String),
    /// Field fails a construction invariant (decay, boundary compatibility).
    #[error("field: {0}")]
    Field(String),
    /// Input/output failure.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    /// Malformed text input (field files, preset strings, numeric args).
    #[error("parse: {0}")]
    Parse(String),
    /// A numerical procedure failed (divergence, tail too large, overflow).
    #[error("numerical: {0}")]
    Numerical(String),
    /// The Riccati solve blew up in finite x, signalling an obstruction.
    #[error("spectral condition violated (eigenvalue <= -1 suspected) at x = {0}")]
    SpectralCondition(f64),
}

pub type Result<T> = std::result::Result<T, GpError>;
