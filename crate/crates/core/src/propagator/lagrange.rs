//! Cayley–Hamilton expansion `exp(−itQ) = Σ_k f_k(t) Q^k`.
//!
//! The coefficients are the Lagrange interpolation of `e^{−itλ}` on the
//! eigenvalues. The printed four-level `f₂`, `f₃` repeat `e^{−itλ₃}` in the
//! last term; the interpolant over all four eigenvalues is used here.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::{Method, Propagator, LAGRANGE_GAP_RTOL};
use crate::error::{Error, Result};
use crate::model::CouplingMatrix;
use crate::roots::{closed_form_spectrum, Spectrum};

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeCoeffs {
    /// `f_0 … f_{n−1}`.
    pub f: Vec<C64>,
    pub t: f64,
    pub spectrum: Spectrum,
}

impl LagrangeCoeffs {
    /// `Σ_k f_k λ^k`.
    pub fn eval(&self, lambda: f64) -> C64 {
        self.f.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * lambda + c)
    }

    /// Largest `|Σ_k f_k λ_j^k − e^{−itλ_j}|` over the spectrum.
    pub fn interpolation_residual(&self) -> f64 {
        self.spectrum
            .eigenvalues
            .iter()
            .map(|&l| (self.eval(l) - C64::from_polar(1.0, -self.t * l)).norm())
            .fold(0.0, f64::max)
    }
}

/// Coefficients of `Π_{m≠skip} (x − λ_m)`, lowest degree first.
fn node_polynomial(lambdas: &[f64], skip: usize) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    for (m, &l) in lambdas.iter().enumerate() {
        if m == skip {
            continue;
        }
        let mut next = vec![0.0; coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= l * c;
        }
        coeffs = next;
    }
    coeffs
}

/// Partial-fraction coefficients
/// `f_k = Σ_j e^{−itλ_j} [x^k] Π_{m≠j}(x − λ_m) / Π_{m≠j}(λ_j − λ_m)`.
pub fn lagrange_coeffs(spectrum: &Spectrum, t: f64) -> Result<LagrangeCoeffs> {
    let n = spectrum.n;
    let threshold = LAGRANGE_GAP_RTOL * spectrum.spectral_radius();
    if spectrum.degeneracy_gap.is_nan() || spectrum.degeneracy_gap <= threshold {
        return Err(Error::DegenerateSpectrum { gap: spectrum.degeneracy_gap, threshold });
    }
    let mut f = vec![C64::new(0.0, 0.0); n];
    if t == 0.0 {
        f[0] = C64::new(1.0, 0.0);
        return Ok(LagrangeCoeffs { f, t, spectrum: spectrum.clone() });
    }
    let lambdas = &spectrum.eigenvalues;
    for (j, &lj) in lambdas.iter().enumerate() {
        let denom: f64 = lambdas
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != j)
            .map(|(_, &lm)| lj - lm)
            .product();
        let weight = C64::from_polar(1.0, -t * lj) / denom;
        for (k, c) in node_polynomial(lambdas, j).into_iter().enumerate() {
            f[k] += weight * c;
        }
    }
    Ok(LagrangeCoeffs { f, t, spectrum: spectrum.clone() })
}

/// `Σ_k f_k(t) Q^k` with powers of `Q` from repeated multiplication.
pub fn propagator_lagrange(q: &CouplingMatrix, t: f64) -> Result<Propagator> {
    let n = q.n();
    let method = match n {
        3 => Method::Lagrange3,
        4 => Method::Lagrange4,
        _ => {
            return Err(Error::MethodUnavailable {
                method: Method::Lagrange4,
                reason: format!("Lagrange expansion needs n = 3 or 4, got {n}"),
            })
        }
    };
    let spectrum = closed_form_spectrum(q)?;
    let coeffs = lagrange_coeffs(&spectrum, t)?;
    if t == 0.0 {
        return Ok(Propagator::identity(n, method));
    }
    let mut power: Array2<f64> = Array2::eye(n);
    let mut m: Array2<C64> = Array2::zeros((n, n));
    for (k, fk) in coeffs.f.iter().enumerate() {
        if k > 0 {
            power = power.dot(q.entries());
        }
        m.zip_mut_with(&power, |acc, &x| *acc += fk * x);
    }
    Ok(Propagator::new(m, t, method))
}
