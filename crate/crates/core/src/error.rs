use thiserror::Error;

use crate::model::ConditionReport;
use crate::propagator::Method;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid level system: {0}")]
    InvalidSystem(String),

    #[error("invalid state vector: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("resonance/consistency conditions violated (worst residual {:.3e})", .0.worst)]
    ConditionViolation(ConditionReport),

    #[error("nonzero phases are only supported by the full (no-RWA) Hamiltonian")]
    UnsupportedPhases,

    #[error("polynomial has non-real roots: {0}")]
    NonRealRoots(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate spectrum: gap {gap:.3e} below threshold {threshold:.3e}")]
    DegenerateSpectrum { gap: f64, threshold: f64 },

    #[error("degenerate eigen-direction for eigenvalue {lambda}: normalizer {normalizer:.3e}")]
    DegenerateDirection { lambda: f64, normalizer: f64 },

    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("integration exceeded {steps} steps at t = {t}")]
    MaxStepsExceeded { t: f64, steps: usize },

    #[error("Hamiltonian is not Hermitian at t = {t} (residual {residual:.3e})")]
    NonHermitian { t: f64, residual: f64 },

    #[error("matrix norm {0:.3e} too large for the reference exponential")]
    NormTooLarge(f64),

    #[error("method {method} unavailable: {reason}")]
    MethodUnavailable { method: Method, reason: String },
}
