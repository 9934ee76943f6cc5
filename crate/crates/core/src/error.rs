use thiserror::Error;

use crate::game::Violation;
use crate::solver::EquilibriumReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game definition: {}", join_violations(.0))]
    InvalidGame(Vec<Violation>),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The iteration budget ran out before the duality gap closed. Carries the
    /// best iterate found so far.
    #[error("solver did not converge: relative gap {gap:.3e} after {iterations} iterations")]
    Convergence {
        gap: f64,
        iterations: usize,
        best: Box<EquilibriumReport>,
    },

    #[error("cost function {resource} is not strictly increasing")]
    NotStrictlyIncreasing { resource: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub(crate) fn dim_check(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}
