use thiserror::Error;

use crate::nonlinear::PicardReport;

pub type Result<T> = std::result::Result<T, FhnError>;

#[derive(Debug, Error)]
pub enum FhnError {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// Quadrature could not reach the requested tolerance; carries the best estimate.
    #[error("{op}: tolerance {tol:e} not met (best estimate {best}, error estimate {est_error:e})")]
    ToleranceNotMet {
        op: &'static str,
        best: f64,
        est_error: f64,
        tol: f64,
    },

    #[error("{op}: image series truncation needs more than {max_terms} terms for tolerance {tol:e}")]
    Truncation {
        op: &'static str,
        max_terms: usize,
        tol: f64,
    },

    /// Parameters outside the regime where the a priori estimates hold.
    #[error("regime error: {0}")]
    Regime(String),

    #[error("Picard iteration did not converge after {} iterations (residual {:e})", .report.iterations, .report.final_residual)]
    NotConverged { report: PicardReport },

    #[error("divergence in {stage}: {detail}")]
    Divergence { stage: &'static str, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),
}

impl FhnError {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        FhnError::Domain {
            op,
            detail: detail.into(),
        }
    }
}
