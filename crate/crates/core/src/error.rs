use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid representation parameters: {0}")]
    InvalidParams(String),

    #[error("index {k} is not in the index set of this model")]
    IndexOutsideModel { k: i64 },

    #[error("vectors belong to different representation models")]
    ParamsMismatch,

    #[error("no basic solution exists for obstruction index {n}")]
    InObstructionSet { n: i64 },

    #[error("index {n} is not an obstruction index of this model")]
    NotInObstructionSet { n: i64 },

    #[error("vanishing recursion denominator at index {index}")]
    ZeroDenominator { index: i64 },

    #[error("cannot restrict at n = {n}: n must be a nonzero index of the model")]
    InvalidRestriction { n: i64 },

    #[error("twist m = 0 is the untwisted equation; its obstructions are not handled here")]
    Untwisted,

    #[error("twist must be finite, got {0}")]
    InvalidTwist(f64),

    #[error("data is not supported on the one-sided range at n = {n} (offending index {k})")]
    NotRestricted { n: i64, k: i64 },

    #[error("one-sided splitting needs |n| >= |Re nu| + 2, got n = {n}")]
    SplitTooLow { n: i64 },

    #[error(
        "correction term has mass {magnitude:e} at index {k}, outside the allowed two-mode support"
    )]
    SupportViolation { k: i64, magnitude: f64 },

    #[error("truncated system is ill-conditioned (condition estimate {cond:e})")]
    IllConditioned { cond: f64 },

    #[error("truncation radius {got} too small; need at least {required}")]
    TruncationTooSmall { required: i64, got: i64 },

    #[error("residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("tame ratio has a vanishing denominator")]
    ZeroDenominatorNorm,

    #[error("exact arithmetic requires an integer representation parameter")]
    NonIntegerParameter,

    #[error("malformed coefficient file: {0}")]
    Format(String),
}
