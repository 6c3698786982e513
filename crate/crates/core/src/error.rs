use thiserror::Error;

use crate::io::FormatError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid matrix value {value} at ({row}, {col}): {reason}")]
    InvalidValue {
        row: usize,
        col: usize,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid sparse structure: {0}")]
    SparseStructure(String),

    #[error("scale factor {value} at index {index} must be strictly positive")]
    NonPositiveScale { index: usize, value: f64 },

    #[error("component {component} is dead (zero basis sum with zero regularizer)")]
    DeadComponent { component: usize },

    #[error("data matrix has no positive entries")]
    EmptyData,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown solver '{name}' (registered: {available})")]
    UnknownSolver { name: String, available: String },

    #[error("non-finite value in {factor} at iteration {iteration}")]
    NumericalFailure {
        iteration: usize,
        factor: &'static str,
    },

    #[error(transparent)]
    Format(#[from] FormatError),
}
