//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition (shape mismatch, non-finite
    /// values, too few samples, ...).
    #[error("validation: {0}")]
    Validation(String),

    /// A symmetric system could not be factorized even after the jitter
    /// escalation budget was spent.
    #[error("conditioning: {0}")]
    Conditioning(String),

    /// An optimizer ran out of iterations. The message carries the
    /// best-so-far state formatted by the caller.
    #[error("non-convergence: {0}")]
    NonConvergence(String),

    /// Variogram fit ran out of iterations; best-so-far parameters attached
    /// so callers can still report them.
    #[error("variogram fit did not converge after {iterations} iterations (loss {loss:.6e})")]
    VariogramNonConvergence {
        fit: Box<crate::variogram::VariogramFit>,
        iterations: usize,
        loss: f64,
    },

    /// A statistic is undefined for the given input (e.g. Moran's I on a
    /// constant field).
    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    /// An operation produced no data (e.g. binning when every pair lies
    /// beyond the distance cutoff).
    #[error("empty result: {0}")]
    EmptyResult(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
