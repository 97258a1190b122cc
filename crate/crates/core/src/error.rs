use thiserror::Error;

/// Errors produced by the modeling, fitting and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid survey windows: {0}")]
    InvalidWindows(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("insufficient data: got {got} records, need at least {need}")]
    InsufficientData { got: usize, need: usize },

    #[error("degenerate observable zone: probability mass {mass:e} is below 1e-300")]
    DegenerateZone { mass: f64 },

    #[error("non-finite log-likelihood: {0}")]
    NonFinite(String),

    #[error("records outside the observable zone at indices {0:?}")]
    OutsideObservableZone(Vec<usize>),

    #[error("observed information is not positive definite")]
    NotPositiveDefinite,

    #[error("too many failed refits: {failed} of {total}")]
    InsufficientReplicates { failed: usize, total: usize },

    #[error("rejection sampler acceptance rate {rate:e} is below 1e-4")]
    RunawayRejection { rate: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
