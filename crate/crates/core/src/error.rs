use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("too few samples: need at least {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },

    #[error("all pairwise distances in the pooled sample are zero")]
    DegeneratePooledSample,

    #[error("feature width mismatch: {left} vs {right}")]
    FeatureWidthMismatch { left: usize, right: usize },

    #[error("estimator requires n1 == n2, got {n1} and {n2}")]
    UnequalSampleSizes { n1: usize, n2: usize },

    #[error("estimator requires an even sample size, got {0}")]
    OddSampleSize(usize),

    #[error("block size {b} is invalid for n = {n}")]
    BadBlockSize { b: usize, n: usize },

    #[error("invalid scenario parameters: {0}")]
    InvalidScenarioParams(String),

    #[error("perturbed density is negative ({min_value:.3e}) somewhere on [0,1]^d")]
    NegativeDensity { min_value: f64 },

    #[error("rejection sampler exceeded {cap} proposals")]
    RetryCapExceeded { cap: usize },

    #[error("bad IDX magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { expected: u32, found: u32 },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("IDX file truncated: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: usize, found: usize },

    #[error("no images with {0} labels in the store")]
    EmptyLabelGroup(&'static str),

    #[error("matrix is singular or not positive definite")]
    SingularMatrix,

    #[error("mean vectors coincide; the moment ratio is undefined")]
    DegeneratePair,

    #[error("spectral mass {mass:.4} inside [-{interval}, {interval}] is not below {limit}")]
    SpectralMassTooCentral { mass: f64, interval: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
