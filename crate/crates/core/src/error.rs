use alloc::string::String;

use crate::kernel::Side;

/// Failure modes of the estimation pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Too few points carry weight on one side, or the local Gram matrix is
    /// numerically singular. Usually means the bandwidth is too small.
    #[error("singular support on the {side} side (positive-weight points: {support}, rcond: {rcond:.3e})")]
    SingularSupport { side: Side, support: usize, rcond: f64 },

    /// The placebo treatment carries (numerically) no information about the
    /// residualized placebo outcome.
    #[error("weak instrument on the {side} side (rcond of normalized Schur complement: {rcond:.3e})")]
    WeakInstrument { side: Side, rcond: f64 },

    #[error("weak first stage: treatment discontinuity {jump:.3e} is below 1e-6 in magnitude")]
    WeakFirstStage { jump: f64 },

    /// Two algebraically identical computation routes disagree.
    #[error("equivalence breach in {what}: {left} vs {right}")]
    EquivalenceBreach { what: &'static str, left: f64, right: f64 },

    #[error("degenerate variance: the confidence interval has zero width")]
    DegenerateVariance,
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::SingularSupport { .. } => "singular_support",
            Error::WeakInstrument { .. } => "weak_instrument",
            Error::WeakFirstStage { .. } => "weak_first_stage",
            Error::EquivalenceBreach { .. } => "equivalence_breach",
            Error::DegenerateVariance => "degenerate_variance",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = core::result::Result<T, Error>;
