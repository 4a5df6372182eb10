use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum DpcError {
    /// Invalid configuration value (dimensions, cutoff, penalty weights, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// The source/pupil overlap carries no energy, so no transfer function exists.
    #[error("degenerate optics: {0}")]
    DegenerateOptics(String),

    /// A transfer function or kernel violates its required symmetry.
    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    /// Pixels where the intensity sum used as a denominator is not positive.
    #[error("degenerate division: {count} pixel(s) with non-positive intensity sum")]
    DegenerateDivision { count: usize },

    #[error("singular deconvolution: {0}")]
    SingularSystem(String),

    #[error("solver diverged at iteration {iteration}: cost is not finite")]
    Divergence { iteration: usize },

    /// Quality metrics against an identically-zero reference are undefined.
    #[error("reference image is identically zero")]
    ZeroReference,

    #[error("pfm: {0}")]
    Pfm(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DpcError>;
