use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PwarxError {
    #[error("dataset too short: {len} samples, need more than {required}")]
    DatasetTooShort { len: usize, required: usize },

    #[error("invalid model order n_a={n_a}, n_b={n_b}: at least one lag is required")]
    InvalidOrder { n_a: usize, n_b: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("reference signal is constant, fit index undefined")]
    DenominatorZero,

    #[error("noise sequence has zero power")]
    ZeroNoisePower,

    #[error("need at least {needed} initial output samples, got {got}")]
    InsufficientInitialCondition { needed: usize, got: usize },

    #[error("normal equations are singular")]
    SingularSystem,

    #[error("mode label {label} out of range for K={k}")]
    InvalidLabel { label: usize, k: usize },

    #[error("boundary cannot be normalized: input coefficient is zero")]
    ZeroNormalizer,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, PwarxError>;
