use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// Each variant maps onto one process exit code (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of panels before meeting its tolerance.
    #[error("quadrature did not converge: error estimate {estimate:.3e} after {panels} panels (target {target:.3e})")]
    Convergence { estimate: f64, target: f64, panels: usize },

    /// The least-squares basis is numerically degenerate for the supplied samples.
    #[error("ill-conditioned expansion fit (condition estimate {condition:.3e}): {reason}")]
    Conditioning { condition: f64, reason: String },

    /// A relative trace model cannot support the requested computation.
    #[error("trace model error: {0}")]
    Model(String),

    /// The remainder after subtracting the small-t expansion is not O(sqrt t).
    #[error("expansion mismatch: remainder/sqrt(t) = {ratio:.3e} at t = {t:.3e} exceeds bound {bound:.3e}")]
    ModelMismatch { t: f64, ratio: f64, bound: f64 },

    /// Two independent evaluations of the same quantity disagree.
    #[error("inconsistent results: analytic {analytic:.12e} vs finite-difference {finite_difference:.12e}")]
    Inconsistency { analytic: f64, finite_difference: f64 },

    /// A caller violated a documented precondition (topology, decay class, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A descent step could not be accepted.
    #[error("line search failed at iteration {iteration}: {reason}")]
    LineSearch { iteration: usize, reason: String },

    /// A surface or factor file failed validation.
    #[error("load error ({invariant}): {detail}")]
    Load { invariant: String, detail: String },

    /// Malformed user input (CSV, grid syntax, JSON).
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 usage/parse, 3 contract, 4 numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Parse(_) | Error::Load { .. } | Error::Io(_) | Error::Json(_) => 2,
            Error::Contract(_) | Error::Model(_) | Error::ModelMismatch { .. } => 3,
            Error::Convergence { .. }
            | Error::Conditioning { .. }
            | Error::Inconsistency { .. }
            | Error::LineSearch { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
