use thiserror::Error;

use crate::protocol::ProtocolReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown operator kind `{0}`")]
    UnknownOperatorKind(String),

    #[error("position operator requires the length scale xi")]
    MissingLengthScale,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for {what} (len {len})")]
    IndexOutOfRange { what: &'static str, index: usize, len: usize },

    #[error("state layout: {0}")]
    Layout(String),

    #[error("hamiltonian is not hermitian at t = {time:e} s (deviation {deviation:e})")]
    NonHermitian { time: f64, deviation: f64 },

    #[error(
        "propagation did not reach tol {tol:e} within {max_steps} steps \
         (last step-halving change {residual:e})"
    )]
    PropagationBudget { tol: f64, max_steps: usize, residual: f64 },

    #[error("norm drifted by {drift:e} during propagation")]
    NormDrift { drift: f64 },

    #[error("population {population:e} within the top {levels} Fock level(s) of mode {mode}; truncation would leak")]
    TruncationLeak { mode: usize, levels: usize, population: f64 },

    #[error("carrier Rabi frequencies of |0> and |1> coincide; no vibration-conditioned flip exists")]
    DegenerateCarrier,

    #[error("no carrier CNOT duration up to {t_max:e} s meets tol {tol:e} (best {best_error:e})")]
    NoCnotDuration { t_max: f64, tol: f64, best_error: f64 },

    #[error("mode {mode} is occupied (population {population:e}) but must start in vacuum")]
    ModeOccupied { mode: usize, population: f64 },

    #[error("vibrations did not return to vacuum: error {error:e} exceeds {limit:e}", error = .report.vibration_return_error, limit = crate::protocol::VIBRATION_RETURN_LIMIT)]
    VibrationNotReturned { report: Box<ProtocolReport> },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
