use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("argument outside the mathematical domain: {0}")]
    Domain(String),

    #[error("probability {u} is not enclosed by the bracket [{lo}, {hi}]")]
    Bracket { u: f64, lo: f64, hi: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("linear lift is singular: diagonal entry {index} is zero")]
    SingularLift { index: usize },

    #[error("lift matrix is not lower triangular at ({row}, {col})")]
    NotLowerTriangular { row: usize, col: usize },

    #[error("conditional quantile {stage} is not monotone in its probability argument")]
    MonotonicityViolation { stage: usize },

    #[error("model input {input} has infinite variance")]
    InfiniteVariance { input: usize },

    #[error("model output has (numerically) zero variance")]
    DegenerateOutput,

    #[error("reports are not comparable: {0}")]
    MixedMethods(String),

    #[error("analytic indices are not available for family `{0}`")]
    UnsupportedAnalytic(String),

    #[error("rejection sampler acceptance rate {rate:e} is below {min:e}")]
    AcceptanceTooLow { rate: f64, min: f64 },

    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("spec error in `{field}`: {message}")]
    SpecParse { field: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}
