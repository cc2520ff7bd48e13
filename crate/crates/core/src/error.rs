use thiserror::Error;

/// Errors produced by the attack, training, and auditing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input files.
    #[error("format error: {0}")]
    Format(String),
    /// Mismatched image or vector shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Parameter outside its documented range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// Non-finite values or failed numerical procedures.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Operation invoked with an unsupported configuration.
    #[error("unsupported: {0}")]
    Capability(String),
    /// Problem size exceeds a hard budget.
    #[error("size limit exceeded: {0}")]
    Size(String),
    /// A gradient-based step cannot proceed from a zero gradient.
    #[error("degenerate gradient: {0}")]
    DegenerateGradient(String),
    /// A rate with an empty denominator.
    #[error("undefined rate: {0}")]
    UndefinedRate(String),
    /// Rank-deficient regression design.
    #[error("rank deficiency: {0}")]
    Rank(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
