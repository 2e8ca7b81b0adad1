//! Crate-wide error type and result alias.

use thiserror::Error;

/// Errors produced by construction, solving, and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector dimensions do not match the operation's requirements.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    Invalid(String),

    /// The dual ascent stalled before meeting the stopping rule; the best
    /// certified lower bound found so far is carried along.
    #[error("ascent did not converge after {iterations} iterations; best lower bound {best_lower}")]
    NotConverged { best_lower: f64, iterations: usize },

    /// Bisection could not bracket the root within the doubling budget.
    #[error("bracket not found: {0}")]
    BracketNotFound(String),

    /// Boundary data violates the consistency relations between the two
    /// pivotal horizons and the norms evaluated at them.
    #[error("inconsistent boundary data: {0}")]
    InconsistentBoundaryData(String),

    /// Every probed dual direction has a vanishing gauge.
    #[error("degenerate system: {0}")]
    Degenerate(String),

    /// A probe produced positive evidence that the instance is infeasible.
    #[error("infeasibility evidence: {0}")]
    InfeasibilityEvidence(String),

    /// A sanity invariant that should hold mathematically was violated
    /// numerically; indicates a bug or severe ill-conditioning.
    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
