use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A size or parameter was outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A dense-matrix operation was asked for with incompatible shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A dense materialization or dense-only computation was requested for
    /// an `n` above the configured dense limit.
    #[error("n = {n} exceeds the dense limit {limit}")]
    DenseLimit { n: usize, limit: usize },

    /// The spectral-route transform produced imaginary parts larger than
    /// numerically plausible; the result would not be trustworthy.
    #[error("imaginary residue {residue:e} exceeds tolerance {tol:e} (n = {n})")]
    ImaginaryResidue { n: usize, residue: f64, tol: f64 },

    /// A sequence handed to the binner violated its preconditions.
    #[error("binning precondition violated: {0}")]
    BadSequence(String),

    /// `step` was called after the stream's configured length was used up.
    #[error("stream exhausted after {n} steps")]
    StreamExhausted { n: usize },

    /// A linear solve met a (numerically) singular system.
    #[error("singular system: {0}")]
    Singular(String),

    /// Serialized state could not be decoded or had the wrong version.
    #[error("serialization: {0}")]
    Serialization(String),

    /// Underlying I/O failure (CLI file handling).
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for [`Error::InvalidArgument`].
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
