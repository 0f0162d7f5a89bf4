use thiserror::Error;

/// Error type shared by all solver modules.
#[derive(Debug, Error)]
pub enum Error {
    /// Operands disagree in sheet count, codomain dimension or grid shape.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Grid cannot represent the requested operation (wrong divisibility,
    /// incompatible node sets, too few nodes).
    #[error("grid resolution: {0}")]
    Resolution(String),
    /// Problem data violates a structural precondition (coprimality,
    /// symmetry defect above tolerance, missing data).
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    /// A linear algebra or quadrature step failed numerically.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// A diagnostic ratio is undefined for this field (e.g. vanishing
    /// denominator in the frequency function).
    #[error("degenerate field: {0}")]
    Degenerate(String),
    /// Direct-solver size guard tripped.
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    /// Fixed-point iteration diverged.
    #[error("iteration diverged after {iters} iterations")]
    Diverged { iters: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<V> = std::result::Result<V, Error>;
