use thiserror::Error;

/// Errors raised by the tests, generators and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },

    #[error("paired tests need equal sample sizes (x has {x} rows, y has {y})")]
    UnequalSampleSizes { x: usize, y: usize },

    #[error("ragged matrix: {len} values is not a multiple of {cols} columns")]
    Ragged { len: usize, cols: usize },

    #[error("median pairwise distance is zero; bandwidth must be positive")]
    DegenerateBandwidth,

    #[error("invalid bandwidth {0}")]
    InvalidBandwidth(f64),

    #[error("minimax bandwidth rule requires the Gaussian kernel")]
    MinimaxRequiresGaussian,

    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("gamma must lie in [0, 1], got {0}")]
    InvalidGamma(f64),

    #[error("probability must lie in (0, 1), got {0}")]
    InvalidProbability(f64),

    #[error("need at least 2 complete blocks, got {0}")]
    TooFewBlocks(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("generator {0} does not satisfy P = Q")]
    NotANullGenerator(String),

    #[error("degenerate auxiliary variance estimate")]
    DegenerateVariance,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
