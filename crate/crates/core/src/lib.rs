//! Dynamics of an n-level atom driven by n(n-1)/2 laser fields in the
//! rotating-wave approximation.
//!
//! Under the resonance and consistency conditions the Schrödinger equation
//! reduces to `i dΨ̃/dt = QΨ̃` with a constant real symmetric coupling matrix
//! `Q`, so that `Ψ(t) = U(t) exp(-itQ) Ψ(0)`. This crate builds the
//! Hamiltonians and frame matrix ([`model`]), solves the characteristic
//! polynomials of `Q` in closed form ([`roots`]), evaluates `exp(-itQ)` by
//! several independent routes ([`propagator`]), and integrates the full
//! time-dependent equation numerically as a ground truth ([`oracle`]).
//!
//! All quantities use ħ = 1: energies, couplings and drive frequencies share
//! one angular-frequency unit and time is its inverse.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod propagator;
pub mod roots;
pub mod scenario;

pub use error::{Error, Result};
pub use model::{ConditionReport, CouplingMatrix, Drive, LevelSystem, StateVector};
pub use oracle::{IntegrationConfig, TimeSeries};
pub use propagator::{EigenDecomposition, LagrangeCoeffs, Method, Propagator};
pub use roots::{CubicCoeffs, QuarticCoeffs, Spectrum};

pub use num_complex::Complex64 as C64;
