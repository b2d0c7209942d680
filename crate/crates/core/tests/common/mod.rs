//! Independent reference computations shared by the integration tests.
//! None of these call into the closed-form code paths.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use nlevel::{CouplingMatrix, LevelSystem, StateVector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_coupling(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> CouplingMatrix {
    let upper: Vec<f64> = (0..n * (n - 1) / 2).map(|_| rng.gen_range(lo..hi)).collect();
    CouplingMatrix::from_upper(n, &upper).unwrap()
}

pub fn random_state(rng: &mut impl Rng, n: usize) -> StateVector {
    let v: Array1<C64> = (0..n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    StateVector::normalized(v).unwrap()
}

/// Random energies with spacings in `[0.5, 3)` and drives tuned to every
/// level difference.
pub fn random_consistent_system(rng: &mut impl Rng, n: usize, g_lo: f64, g_hi: f64) -> LevelSystem {
    let mut energies = vec![0.0];
    for _ in 1..n {
        let last = *energies.last().unwrap();
        energies.push(last + rng.gen_range(0.5..3.0));
    }
    let couplings: Vec<f64> = (0..n * (n - 1) / 2).map(|_| rng.gen_range(g_lo..g_hi)).collect();
    // Row-major index of (i, j), i < j, in the packed upper triangle.
    let index = |i: usize, j: usize| i * (2 * n - i - 1) / 2 + (j - i - 1);
    LevelSystem::with_consistent_drives(energies, |i, j| couplings[index(i, j)]).unwrap()
}

/// Characteristic polynomial `det(λI − A) = λⁿ + a₁λⁿ⁻¹ + … + aₙ` by the
/// Faddeev–LeVerrier recursion; returns `[1, a₁, …, aₙ]`.
pub fn faddeev_leverrier(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let eye = Array2::<f64>::eye(n);
    let mut m = eye.clone();
    let mut coeffs = vec![1.0];
    for k in 1..=n {
        let am = a.dot(&m);
        let ak = -am.diag().sum() / k as f64;
        coeffs.push(ak);
        m = am + &eye * ak;
    }
    coeffs
}

/// Householder reduction of a symmetric matrix to tridiagonal form;
/// returns the diagonal and the subdiagonal.
fn tridiagonalize(a: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<f64> = (k + 1..n).map(|i| m[[i, k]]).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vn = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        let mut h = Array2::<f64>::eye(n);
        for i in 0..v.len() {
            for j in 0..v.len() {
                h[[k + 1 + i, k + 1 + j]] -= 2.0 * v[i] * v[j] / (vn * vn);
            }
        }
        m = h.dot(&m).dot(&h);
    }
    let d = (0..n).map(|i| m[[i, i]]).collect();
    let e = (1..n).map(|i| m[[i, i - 1]]).collect();
    (d, e)
}

/// Number of eigenvalues below `x` of the tridiagonal matrix `(d, e)`,
/// from the Sturm sequence of its leading minors.
fn count_below(d: &[f64], e: &[f64], x: f64, tiny: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] / q };
        q = d[i] - x - off;
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalues of a symmetric matrix by Sturm bisection,
/// sorted descending.
pub fn bisection_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let radius = (0..n)
        .map(|i| (0..n).map(|j| a[[i, j]].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    let (d, e) = tridiagonalize(a);
    let tiny = f64::EPSILON * radius;
    let mut out: Vec<f64> = (0..n)
        .map(|k| {
            // k-th smallest: the smallest x with count_below(x) > k.
            let (mut lo, mut hi) = (-radius, radius);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if count_below(&d, &e, mid, tiny) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    out.reverse();
    out
}

/// Solves the complex Vandermonde system `Σ_k f_k λ_j^k = e^{−itλ_j}` by
/// Gaussian elimination with partial pivoting.
pub fn vandermonde_coeffs(lambdas: &[f64], t: f64) -> Vec<C64> {
    let n = lambdas.len();
    let mut m = Array2::<C64>::zeros((n, n + 1));
    for (j, &l) in lambdas.iter().enumerate() {
        for k in 0..n {
            m[[j, k]] = C64::new(l.powi(k as i32), 0.0);
        }
        m[[j, n]] = C64::from_polar(1.0, -t * l);
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[[a, col]].norm().total_cmp(&m[[b, col]].norm())).unwrap();
        for k in 0..=n {
            m.swap([col, k], [piv, k]);
        }
        for row in 0..n {
            if row != col {
                let f = m[[row, col]] / m[[col, col]];
                for k in col..=n {
                    let v = m[[col, k]];
                    m[[row, k]] -= f * v;
                }
            }
        }
    }
    (0..n).map(|k| m[[k, n]] / m[[k, k]]).collect()
}

/// The explicit `exp(−itQ)` for three levels with `g3 = 0`.
pub fn appendix_propagator(g1: f64, g2: f64, t: f64) -> Array2<C64> {
    let s2 = g1 * g1 + g2 * g2;
    let l = s2.sqrt();
    let (sn, cs) = (t * l).sin_cos();
    let re = |x: f64| C64::new(x, 0.0);
    let im = |x: f64| C64::new(0.0, x);
    let a00 = re((g1 * g1 * cs + g2 * g2) / s2);
    let a01 = im(-g1 * sn / l);
    let a02 = re((g1 * g2 * cs - g1 * g2) / s2);
    let a11 = re(cs);
    let a12 = im(-g2 * sn / l);
    let a22 = re((g2 * g2 * cs + g1 * g1) / s2);
    ndarray::arr2(&[[a00, a01, a02], [a01, a11, a12], [a02, a12, a22]])
}

pub fn frobenius(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_sorted_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Parses a CSV written by the CLI, skipping `#` comments.
pub fn read_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = reader.headers().unwrap().iter().map(str::to_string).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

/// Sums of the `pop_*` columns of each row, grouped by column prefix.
pub fn population_sums(header: &[String], rows: &[Vec<f64>]) -> Vec<f64> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut prefixes: Vec<String> = Vec::new();
    for (k, h) in header.iter().enumerate() {
        if let Some(pos) = h.find("pop_") {
            let prefix = h[..pos].to_string();
            match prefixes.iter().position(|p| *p == prefix) {
                Some(g) => groups[g].push(k),
                None => {
                    prefixes.push(prefix);
                    groups.push(vec![k]);
                }
            }
        }
    }
    rows.iter()
        .flat_map(|row| groups.iter().map(move |g| g.iter().map(|&k| row[k]).sum::<f64>()))
        .collect()
}
