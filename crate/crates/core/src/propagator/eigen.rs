//! Orthogonal diagonalization `Q = O diag(λ) Oᵀ`, either from the closed-form
//! three-level eigenvectors or from cyclic Jacobi rotations.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::CouplingMatrix;
use crate::roots::Spectrum;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub spectrum: Spectrum,
    /// Column `j` is the unit eigenvector for `spectrum.eigenvalues[j]`.
    pub vectors: Array2<f64>,
}

impl EigenDecomposition {
    /// `‖O diag(λ) Oᵀ − Q‖_F`.
    pub fn reconstruction_error(&self, q: &CouplingMatrix) -> f64 {
        let o = &self.vectors;
        let scaled = o * &ndarray::Array1::from(self.spectrum.eigenvalues.clone());
        crate::linalg::frobenius_real(&(scaled.dot(&o.t()) - q.entries()))
    }

    /// `‖O Oᵀ − I‖_F`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.vectors.nrows();
        crate::linalg::frobenius_real(&(self.vectors.dot(&self.vectors.t()) - Array2::<f64>::eye(n)))
    }
}

fn off_diagonal_norm(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[[i, j]] * a[[i, j]];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigendecomposition; eigenvalues sorted descending.
pub fn jacobi_eigendecompose(q: &CouplingMatrix) -> Result<EigenDecomposition> {
    let n = q.n();
    let mut a = q.entries().clone();
    let mut v: Array2<f64> = Array2::eye(n);
    let tol = 1e-12 * q.frobenius();

    let mut converged = off_diagonal_norm(&a) <= tol;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for r in p + 1..n {
                let apr = a[[p, r]];
                if apr == 0.0 {
                    continue;
                }
                let theta = (a[[r, r]] - a[[p, p]]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- Jᵀ A J
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akr = a[[k, r]];
                    a[[k, p]] = c * akp - s * akr;
                    a[[k, r]] = s * akp + c * akr;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let ark = a[[r, k]];
                    a[[p, k]] = c * apk - s * ark;
                    a[[r, k]] = s * apk + c * ark;
                }
                a[[p, r]] = 0.0;
                a[[r, p]] = 0.0;
                // V <- V J
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkr = v[[k, r]];
                    v[[k, p]] = c * vkp - s * vkr;
                    v[[k, r]] = s * vkp + c * vkr;
                }
            }
        }
        converged = off_diagonal_norm(&a) <= tol;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].total_cmp(&a[[i, i]]));
    let values = order.iter().map(|&k| a[[k, k]]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    Ok(EigenDecomposition { spectrum: Spectrum::from_values(values), vectors })
}

fn residual(q: &CouplingMatrix, lambda: f64, x: &[f64; 3]) -> f64 {
    let e = q.entries();
    (0..3)
        .map(|i| {
            let qx: f64 = (0..3).map(|k| e[[i, k]] * x[k]).sum();
            (qx - lambda * x[i]).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Eigenvector from the linear relations, solving for the two components
/// paired with the largest of `λ² − g1²`, `λ² − g2²`, `λ² − g3²`.
fn eigenvector_from_relations(g: [f64; 3], lambda: f64) -> Option<[f64; 3]> {
    let [g1, g2, g3] = g;
    let l2 = lambda * lambda;
    let dens = [l2 - g1 * g1, l2 - g2 * g2, l2 - g3 * g3];
    let k = (0..3).max_by(|&a, &b| dens[a].abs().total_cmp(&dens[b].abs()))?;
    let d = dens[k];
    if d == 0.0 {
        return None;
    }
    let x = match k {
        // z = 1
        0 => [(lambda * g3 + g1 * g2) / d, (lambda * g2 + g1 * g3) / d, 1.0],
        // x = 1
        1 => [1.0, (lambda * g1 + g2 * g3) / d, (lambda * g3 + g1 * g2) / d],
        // y = 1
        _ => [(lambda * g1 + g2 * g3) / d, 1.0, (lambda * g2 + g1 * g3) / d],
    };
    let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return None;
    }
    Some(x.map(|c| c / norm))
}

/// Closed-form normalized eigenvectors of a three-level `Q`:
///
/// `|λ⟩ = ( √((λ²−g2²)/D), √((λ²−g3²)/D), √((λ²−g1²)/D) )`, `D = 3λ² − (g1²+g2²+g3²)`,
///
/// with `(g1, g2, g3) = (Q01, Q12, Q02)`. The square roots carry no sign
/// information, so each column takes the sign pattern (first component
/// non-negative) with the smallest `‖Qx − λx‖`. When `λ²` sits within 1e-8 of
/// some `g²` a component is at the 0/0 point of the derivation and the
/// vector is taken from the linear relations instead.
pub fn eigenvectors_three_level(q: &CouplingMatrix, spectrum: &Spectrum) -> Result<EigenDecomposition> {
    if q.n() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, actual: q.n() });
    }
    if spectrum.n != 3 {
        return Err(Error::DimensionMismatch { expected: 3, actual: spectrum.n });
    }
    let g = [q.get(0, 1), q.get(1, 2), q.get(0, 2)];
    let [g1, g2, g3] = g;
    let sum_sq = g1 * g1 + g2 * g2 + g3 * g3;
    let q_norm = q.frobenius();
    let mut vectors = Array2::zeros((3, 3));

    for (col, &lambda) in spectrum.eigenvalues.iter().enumerate() {
        let l2 = lambda * lambda;
        let d = 3.0 * l2 - sum_sq;
        if sum_sq == 0.0 || d.abs() < 1e-10 * q_norm * q_norm {
            return Err(Error::DegenerateDirection { lambda, normalizer: d });
        }
        let numerators = [l2 - g2 * g2, l2 - g3 * g3, l2 - g1 * g1];
        let near_zero = numerators.iter().any(|x| x.abs() <= 1e-8 * sum_sq);

        let x = if near_zero {
            eigenvector_from_relations(g, lambda).ok_or(Error::DegenerateDirection { lambda, normalizer: d })?
        } else {
            let roots = numerators.map(|num| C64::new(num / d, 0.0).sqrt().re);
            [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
                .iter()
                .map(|[s1, s2]| [roots[0], s1 * roots[1], s2 * roots[2]])
                .min_by(|a, b| residual(q, lambda, a).total_cmp(&residual(q, lambda, b)))
                .expect("four candidates")
        };
        let res = residual(q, lambda, &x);
        if res > 1e-8 * q_norm {
            return Err(Error::InvalidInput(format!(
                "closed-form eigenvector for λ = {lambda} has residual {res:.3e}"
            )));
        }
        for (i, c) in x.into_iter().enumerate() {
            vectors[[i, col]] = c;
        }
    }
    Ok(EigenDecomposition { spectrum: spectrum.clone(), vectors })
}
