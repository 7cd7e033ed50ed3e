use num_complex::Complex64;
use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("singular input: {0}")]
    Singular(String),

    #[error("outside the domain of this evaluator: {0}")]
    Domain(String),

    #[error("series did not converge within {terms} terms (partial sum {partial})")]
    NonConvergence { terms: usize, partial: Complex64 },

    #[error("numerical failure: {0}")]
    Numerics(String),

    #[error("eigendecomposition failed for matrix {0}")]
    Eigen(String),

    #[error("region exceeds bath extent: {0}")]
    Region(String),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures caused by the caller's input rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse(_) | Error::Region(_) | Error::SizeCap(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
