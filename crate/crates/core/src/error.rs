use num_complex::Complex64;
use thiserror::Error;

use crate::coeffs::Band;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The coefficient model contradicts the standing limit assumptions.
    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),

    /// A recurrence step needed to divide by a zero band entry.
    #[error("zero pivot: band {band} entry {index} vanishes")]
    Pivot { band: Band, index: usize },

    /// The spectral parameter lies where no decaying solution exists.
    #[error("spectral-region error: {0}")]
    SpectralRegion(String),

    #[error("numerical instability: {0}")]
    Instability(String),

    #[error("numerical-domain error: {0}")]
    NumericalDomain(String),

    #[error("QR iteration did not converge after {iterations} iterations ({deflated} of {size} eigenvalues deflated)")]
    Convergence {
        iterations: usize,
        deflated: usize,
        size: usize,
    },

    #[error("consistency error: {0}")]
    Consistency(String),

    /// Direct and adjoint searches disagree; both point lists are attached.
    #[error("direct/adjoint mismatch: {} direct vs {} adjoint eigenvalues", direct.len(), adjoint.len())]
    AdjointMismatch {
        direct: Vec<Complex64>,
        adjoint: Vec<Complex64>,
    },

    /// The exponential-rate hypothesis is not established and was not overridden.
    #[error("hypothesis unmet: {0}")]
    HypothesisUnmet(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
