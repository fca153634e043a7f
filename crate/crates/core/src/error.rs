use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("moment of order {order} does not exist; admissible open interval is ({lo}, {hi})")]
    MomentNotFinite { order: f64, lo: f64, hi: f64 },
    #[error("nonfinite value at quadrature node {0}")]
    NonFinite(usize),
    #[error("model is not full-dimensional: the star body is unbounded and its volume is infinite")]
    InfiniteVolume,
    #[error("empty tail: no sample has norm at or above {0}")]
    EmptyTail(f64),
    #[error("kind mismatch: {0}")]
    KindMismatch(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
