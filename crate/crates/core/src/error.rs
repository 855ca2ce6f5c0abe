use thiserror::Error;

use crate::Vector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("operator is not monotone: {0}")]
    NotMonotone(String),

    #[error("functional outside the subgradient catalog: {0}")]
    OutsideCatalog(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("operator returned a non-finite value at x = {x:?}")]
    Operator { x: Vec<f64> },

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("trace i/o: {0}")]
    Trace(String),
}

impl Error {
    pub(crate) fn operator_at(x: &Vector) -> Self {
        Error::Operator {
            x: x.iter().copied().collect(),
        }
    }
}
