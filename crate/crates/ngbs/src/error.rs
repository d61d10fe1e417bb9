//! Crate-wide error type.
//!
//! Every fallible operation across the covariance, matching, preparation,
//! oracle, and pipeline modules reports through [`Error`]; callers match on
//! the variant rather than on message text.

use thiserror::Error;

/// Unified error type for the engine.
#[derive(Debug, Error)]
pub enum Error {
    /// An interferometer matrix failed the unitarity check.
    #[error("matrix is not unitary (max |U^+U - I| = {defect:.3e}, tolerance {tol:.1e})")]
    NonUnitary {
        /// Measured defect `max |U^+ U - I|`.
        defect: f64,
        /// Tolerance the check was run at.
        tol: f64,
    },
    /// The shifted covariance matrix is numerically singular.
    #[error("shifted covariance matrix is ill-conditioned (cond = {cond:.3e})")]
    SingularSigmaQ {
        /// Estimated 2-norm condition number.
        cond: f64,
    },
    /// A matching enumeration or Fock-space dimension exceeded its cap.
    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionTooLarge {
        /// Requested dimension.
        dim: usize,
        /// Configured cap.
        cap: usize,
    },
    /// Scaling absorption asked for a non-positive probability weight.
    #[error("scaling weight must be positive, got {p:.3e}")]
    InvalidP {
        /// Offending weight.
        p: f64,
    },
    /// A low-rank factorization failed to reproduce its matrix.
    #[error("low-rank factor mismatch (max residual {residual:.3e})")]
    FactorMismatch {
        /// Max-norm residual of `g g^T - A`.
        residual: f64,
    },
    /// A probability evaluated significantly below zero.
    #[error("probability evaluated to {value:.3e} < 0; convention bug")]
    NegativeProbability {
        /// The negative value.
        value: f64,
    },
    /// A quantity that must be real carried a significant imaginary part.
    #[error("imaginary residual {residual:.3e} on real value {scale:.3e}")]
    ImaginaryResidual {
        /// The imaginary part found.
        residual: f64,
        /// The real part it is measured against.
        scale: f64,
    },
    /// A target state had no nonzero coefficient.
    #[error("target state has no nonzero coefficient")]
    DegenerateTarget,
    /// A covariance matrix or displacement vector broke its block structure.
    #[error("covariance structure violated (defect {defect:.3e}, tolerance {tol:.1e})")]
    StructureViolation {
        /// Largest structure defect found.
        defect: f64,
        /// Tolerance the check was run at.
        tol: f64,
    },
    /// A Fock cutoff left too much probability mass above the truncation.
    #[error("cutoff too small: tail mass {tail:.3e} exceeds tolerance {tol:.1e}")]
    CutoffTooSmall {
        /// Measured tail mass.
        tail: f64,
        /// Tolerance it was checked against.
        tol: f64,
    },
    /// Two sources were wired into the same interferometer input.
    #[error("wiring conflict on interferometer mode {mode}")]
    WiringConflict {
        /// The doubly-assigned mode index.
        mode: usize,
    },
    /// Herald success probability underflowed the supported range.
    #[error("herald probability {p:.3e} below supported floor")]
    HeraldImpossible {
        /// The computed herald probability.
        p: f64,
    },
    /// An iterative numerical routine failed to converge.
    #[error("numerical iteration failed to converge after {iterations} steps")]
    NoConvergence {
        /// Iterations performed before giving up.
        iterations: usize,
    },
}

impl From<crate::linalg::LinalgError> for Error {
    fn from(e: crate::linalg::LinalgError) -> Self {
        match e {
            crate::linalg::LinalgError::NotPositiveDefinite { .. } => {
                Error::SingularSigmaQ { cond: f64::INFINITY }
            }
            crate::linalg::LinalgError::NoConvergence { iterations } => {
                Error::NoConvergence { iterations }
            }
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
