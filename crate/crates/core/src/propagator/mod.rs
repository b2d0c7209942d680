//! `exp(−itQ)` by every available route, behind one dispatcher.
//!
//! | method          | applies to                        |
//! |-----------------|-----------------------------------|
//! | `TwoLevel`      | n = 2                             |
//! | `Lagrange3/4`   | n = 3, 4 with a non-degenerate spectrum |
//! | `EqualCoupling` | all off-diagonal couplings equal  |
//! | `ClosedEigen3`  | n = 3, closed-form eigenvectors   |
//! | `JacobiEigen`   | any n                             |
//! | `Reference`     | any n (Taylor scaling-and-squaring) |

mod eigen;
mod lagrange;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{identity, CMatrix};
use crate::model::{CouplingMatrix, StateVector};
use crate::oracle::reference_expm;
use crate::roots::closed_form_spectrum;

pub use eigen::{eigenvectors_three_level, jacobi_eigendecompose, EigenDecomposition};
pub use lagrange::{lagrange_coeffs, propagator_lagrange, LagrangeCoeffs};

/// Dispatch to the Lagrange expansion only above this gap, relative to the
/// spectral radius.
pub const LAGRANGE_GAP_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "two-level")]
    TwoLevel,
    #[serde(rename = "lagrange3")]
    Lagrange3,
    #[serde(rename = "lagrange4")]
    Lagrange4,
    #[serde(rename = "equal-coupling")]
    EqualCoupling,
    #[serde(rename = "closed-eigen3")]
    ClosedEigen3,
    #[serde(rename = "jacobi")]
    JacobiEigen,
    #[serde(rename = "reference")]
    Reference,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::TwoLevel,
        Method::Lagrange3,
        Method::Lagrange4,
        Method::EqualCoupling,
        Method::ClosedEigen3,
        Method::JacobiEigen,
        Method::Reference,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::TwoLevel => "two-level",
            Method::Lagrange3 => "lagrange3",
            Method::Lagrange4 => "lagrange4",
            Method::EqualCoupling => "equal-coupling",
            Method::ClosedEigen3 => "closed-eigen3",
            Method::JacobiEigen => "jacobi",
            Method::Reference => "reference",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                format!("unknown method '{s}', expected one of: {}", names.join(", "))
            })
    }
}

/// A computed `exp(−itQ)` and the route that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    pub n: usize,
    pub matrix: CMatrix,
    pub t: f64,
    pub method: Method,
}

impl Propagator {
    fn new(matrix: CMatrix, t: f64, method: Method) -> Self {
        Self { n: matrix.nrows(), matrix, t, method }
    }

    fn identity(n: usize, method: Method) -> Self {
        Self::new(identity(n), 0.0, method)
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, actual: psi.dim() });
        }
        Ok(StateVector::from_evolved(self.matrix.dot(psi.amplitudes())))
    }
}

/// Rabi matrix `exp(−igtσ₁) = [[cos gt, −i sin gt], [−i sin gt, cos gt]]`.
pub fn propagator_two_level(g: f64, t: f64) -> Propagator {
    if t == 0.0 {
        return Propagator::identity(2, Method::TwoLevel);
    }
    let (s, c) = (g * t).sin_cos();
    let diag = C64::new(c, 0.0);
    let off = C64::new(0.0, -s);
    let m = ndarray::arr2(&[[diag, off], [off, diag]]);
    Propagator::new(m, t, Method::TwoLevel)
}

/// `exp(−itgR) = e^{igt}(1 + (e^{−ingt} − 1)/n · |1⟩⟨1|)` with `R = |1⟩⟨1| − 1`.
pub fn propagator_equal_coupling(n: usize, g: f64, t: f64) -> Result<Propagator> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("equal-coupling propagator needs n >= 2, got {n}")));
    }
    if t == 0.0 {
        return Ok(Propagator::identity(n, Method::EqualCoupling));
    }
    let global = C64::from_polar(1.0, g * t);
    let nf = n as f64;
    let off = global * (C64::from_polar(1.0, -nf * g * t) - 1.0) / nf;
    let mut m = Array2::from_elem((n, n), off);
    for k in 0..n {
        m[[k, k]] += global;
    }
    Ok(Propagator::new(m, t, Method::EqualCoupling))
}

/// `O diag(e^{−itλ_j}) Oᵀ`.
pub fn propagator_from_eigen(decomp: &EigenDecomposition, t: f64) -> Propagator {
    propagator_from_eigen_tagged(decomp, t, Method::JacobiEigen)
}

fn propagator_from_eigen_tagged(decomp: &EigenDecomposition, t: f64, method: Method) -> Propagator {
    let n = decomp.vectors.nrows();
    if t == 0.0 {
        return Propagator::identity(n, method);
    }
    let phases: Vec<C64> = decomp
        .spectrum
        .eigenvalues
        .iter()
        .map(|l| C64::from_polar(1.0, -t * l))
        .collect();
    let o = &decomp.vectors;
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v: C64 = (0..n).map(|k| phases[k] * (o[[i, k]] * o[[j, k]])).sum();
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    Propagator::new(m, t, method)
}

fn unavailable(method: Method, reason: impl Into<String>) -> Error {
    Error::MethodUnavailable { method, reason: reason.into() }
}

fn with_method(q: &CouplingMatrix, t: f64, method: Method) -> Result<Propagator> {
    let n = q.n();
    match method {
        Method::TwoLevel => {
            if n != 2 {
                return Err(unavailable(method, format!("requires n = 2, got {n}")));
            }
            Ok(propagator_two_level(q.get(0, 1), t))
        }
        Method::Lagrange3 | Method::Lagrange4 => {
            let want = if method == Method::Lagrange3 { 3 } else { 4 };
            if n != want {
                return Err(unavailable(method, format!("requires n = {want}, got {n}")));
            }
            propagator_lagrange(q, t)
        }
        Method::EqualCoupling => {
            let g = q
                .equal_coupling()
                .ok_or_else(|| unavailable(method, "couplings are not all equal"))?;
            propagator_equal_coupling(n, g, t)
        }
        Method::ClosedEigen3 => {
            if n != 3 {
                return Err(unavailable(method, format!("requires n = 3, got {n}")));
            }
            let spectrum = closed_form_spectrum(q)?;
            let decomp = eigenvectors_three_level(q, &spectrum)?;
            Ok(propagator_from_eigen_tagged(&decomp, t, Method::ClosedEigen3))
        }
        Method::JacobiEigen => Ok(propagator_from_eigen(&jacobi_eigendecompose(q)?, t)),
        Method::Reference => {
            if t == 0.0 {
                return Ok(Propagator::identity(n, method));
            }
            let a = q.to_complex().mapv(|x| C64::new(0.0, -t) * x);
            Ok(Propagator::new(reference_expm(&a)?, t, method))
        }
    }
}

/// The method the dispatcher picks for `q` when none is forced.
pub fn select_method(q: &CouplingMatrix) -> Method {
    let n = q.n();
    if n == 2 {
        return Method::TwoLevel;
    }
    if q.equal_coupling().is_some() {
        return Method::EqualCoupling;
    }
    if n == 3 || n == 4 {
        if let Ok(s) = closed_form_spectrum(q) {
            if s.degeneracy_gap > LAGRANGE_GAP_RTOL * s.spectral_radius() {
                return if n == 3 { Method::Lagrange3 } else { Method::Lagrange4 };
            }
        }
    }
    Method::JacobiEigen
}

/// `exp(−itQ)` by `method`, or by [`select_method`] when `None`.
pub fn propagator(q: &CouplingMatrix, t: f64, method: Option<Method>) -> Result<Propagator> {
    let method = method.unwrap_or_else(|| select_method(q));
    with_method(q, t, method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, max_abs_diff, unitarity_residual};
    use std::f64::consts::PI;

    #[test]
    fn two_level_examples() {
        assert_eq!(propagator_two_level(0.7, 0.0).matrix, identity(2));
        let p = propagator_two_level(2.0, PI / 4.0);
        let expected = ndarray::arr2(&[
            [C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
            [C64::new(0.0, -1.0), C64::new(0.0, 0.0)],
        ]);
        assert!(max_abs_diff(&p.matrix, &expected) < 1e-15);
    }

    #[test]
    fn two_level_equals_equal_coupling() {
        for (g, t) in [(0.3, 1.1), (1.7, 4.2), (0.05, 33.0)] {
            let a = propagator_two_level(g, t);
            let b = propagator_equal_coupling(2, g, t).unwrap();
            assert!(max_abs_diff(&a.matrix, &b.matrix) <= 1e-12);
        }
    }

    #[test]
    fn equal_coupling_edges() {
        assert_eq!(propagator_equal_coupling(5, 1.3, 0.0).unwrap().matrix, identity(5));
        let p = propagator_equal_coupling(4, 0.0, 3.0).unwrap();
        assert!(max_abs_diff(&p.matrix, &identity(4)) < 1e-15);
        assert!(propagator_equal_coupling(1, 1.0, 1.0).is_err());
    }

    #[test]
    fn equal_coupling_period() {
        // n g t = 2π gives e^{igt} times the identity
        let (n, g) = (6, 0.4);
        let t = 2.0 * PI / (n as f64 * g);
        let p = propagator_equal_coupling(n, g, t).unwrap();
        let phase = C64::from_polar(1.0, g * t);
        assert!(max_abs_diff(&p.matrix, &identity(n).mapv(|z| z * phase)) < 1e-12);
    }

    #[test]
    fn dispatch_rules() {
        assert_eq!(select_method(&CouplingMatrix::from_upper(2, &[0.3]).unwrap()), Method::TwoLevel);
        assert_eq!(select_method(&CouplingMatrix::equal(3, 0.8).unwrap()), Method::EqualCoupling);
        assert_eq!(
            select_method(&CouplingMatrix::from_upper(3, &[1.0, 3.0, 2.0]).unwrap()),
            Method::Lagrange3
        );
        assert_eq!(
            select_method(&CouplingMatrix::from_upper(4, &[1.0, 4.0, 6.0, 2.0, 5.0, 3.0]).unwrap()),
            Method::Lagrange4
        );
        // a double eigenvalue that is not the equal-coupling pattern
        let degenerate = CouplingMatrix::from_upper(4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(select_method(&degenerate), Method::JacobiEigen);
        let seven = CouplingMatrix::from_upper(7, &(0..21).map(|k| 0.1 * k as f64).collect::<Vec<_>>()).unwrap();
        assert_eq!(select_method(&seven), Method::JacobiEigen);
        let p = propagator(&seven, 2.5, None).unwrap();
        assert!(unitarity_residual(&p.matrix) <= 1e-9 * 7.0);
    }

    #[test]
    fn forced_methods_check_preconditions() {
        let q3 = CouplingMatrix::from_upper(3, &[1.0, 3.0, 2.0]).unwrap();
        assert!(matches!(
            propagator(&q3, 1.0, Some(Method::TwoLevel)),
            Err(Error::MethodUnavailable { .. })
        ));
        assert!(propagator(&q3, 1.0, Some(Method::Lagrange4)).is_err());
        assert!(propagator(&q3, 1.0, Some(Method::EqualCoupling)).is_err());
        let eq = CouplingMatrix::equal(3, 1.0).unwrap();
        assert!(matches!(
            propagator(&eq, 1.0, Some(Method::Lagrange3)),
            Err(Error::DegenerateSpectrum { .. })
        ));
        for m in [Method::Lagrange3, Method::ClosedEigen3, Method::JacobiEigen, Method::Reference] {
            let p = propagator(&q3, 0.0, Some(m)).unwrap();
            assert_eq!(p.matrix, identity(3), "{m}");
            assert_eq!(p.method, m);
        }
    }

    #[test]
    fn methods_agree_on_a_fixed_case() {
        let q = CouplingMatrix::from_upper(3, &[1.0, 3.0, 2.0]).unwrap();
        let t = 0.83;
        let reference = propagator(&q, t, Some(Method::Reference)).unwrap().matrix;
        for m in [Method::Lagrange3, Method::ClosedEigen3, Method::JacobiEigen] {
            let p = propagator(&q, t, Some(m)).unwrap();
            assert!(frobenius(&(&p.matrix - &reference)) <= 1e-9, "{m}");
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert!("auto".parse::<Method>().is_err());
    }
}
