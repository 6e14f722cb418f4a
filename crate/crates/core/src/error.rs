use thiserror::Error;

use crate::exchange::ExchangeReport;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("algebra mismatch: expected blocks {expected:?}, got {found:?}")]
    AlgebraMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("map direction mismatch: {0}")]
    Direction(String),

    #[error("invalid permutation {0:?}")]
    InvalidPermutation(Vec<usize>),

    #[error("invalid injection {tau:?} into {m} slots")]
    InvalidInjection { tau: Vec<usize>, m: usize },

    #[error("cannot move from level {from} to level {to}")]
    LevelOrder { from: usize, to: usize },

    #[error("sequence is not exchangeable (worst violation {:.3e})", .0.worst_violation())]
    NotExchangeable(Box<ExchangeReport>),

    /// `tau` is stored 0-based and displayed 1-based.
    #[error(
        "cone law violated: injection {} ({n} -> {m}) off by {violation:.3e} on probe {probe}",
        crate::perm::display_one_based(.tau)
    )]
    ConeLaw {
        tau: Vec<usize>,
        n: usize,
        m: usize,
        probe: usize,
        violation: f64,
    },

    #[error(
        "not representable over the atom set: residual {residual:.3e} exceeds {threshold:.3e}"
    )]
    NotRepresentable { residual: f64, threshold: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
