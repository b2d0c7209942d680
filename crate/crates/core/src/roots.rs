//! Characteristic polynomials of `Q` for three and four levels and their
//! closed-form real roots (Cardano for the cubic, Euler for the quartic).
//!
//! Both solvers assemble roots in complex arithmetic, drop the O(ε) imaginary
//! residue, and polish each root with one guarded Newton step.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::CouplingMatrix;

/// Imaginary residue allowed on an assembled root, relative to `max(1, |λ|)`.
const IMAG_TOL: f64 = 1e-10;

/// `λ³ − c1·λ − c0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoeffs {
    pub c1: f64,
    pub c0: f64,
}

impl CubicCoeffs {
    pub fn eval(&self, x: f64) -> f64 {
        (x * x - self.c1) * x - self.c0
    }

    fn derivative(&self, x: f64) -> f64 {
        3.0 * x * x - self.c1
    }
}

/// `λ⁴ + p·λ² + q·λ + r = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoeffs {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl QuarticCoeffs {
    pub fn eval(&self, x: f64) -> f64 {
        let x2 = x * x;
        (x2 + self.p) * x2 + self.q * x + self.r
    }

    fn derivative(&self, x: f64) -> f64 {
        (4.0 * x * x + 2.0 * self.p) * x + self.q
    }
}

/// Real eigenvalues sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Smallest separation between any two eigenvalues (infinite for n = 1).
    pub degeneracy_gap: f64,
    pub n: usize,
}

impl Spectrum {
    /// Sorts descending; equal values keep their input order.
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        let degeneracy_gap = values
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min);
        Self { n: values.len(), eigenvalues: values, degeneracy_gap }
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

fn require_dim(q: &CouplingMatrix, n: usize) -> Result<()> {
    if q.n() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: q.n() });
    }
    Ok(())
}

/// `det(λI − Q)` for three levels, with `(g1, g2, g3) = (Q01, Q12, Q02)`.
pub fn char_poly_3(q: &CouplingMatrix) -> Result<CubicCoeffs> {
    require_dim(q, 3)?;
    let (g1, g2, g3) = (q.get(0, 1), q.get(1, 2), q.get(0, 2));
    Ok(CubicCoeffs { c1: g1 * g1 + g2 * g2 + g3 * g3, c0: 2.0 * g1 * g2 * g3 })
}

/// `det(λI − Q)` for four levels.
///
/// Couplings are labelled `g1 = Q01, g2 = Q12, g3 = Q23, g4 = Q02, g5 = Q13,
/// g6 = Q03`.
pub fn char_poly_4(q: &CouplingMatrix) -> Result<QuarticCoeffs> {
    require_dim(q, 4)?;
    let g1 = q.get(0, 1);
    let g2 = q.get(1, 2);
    let g3 = q.get(2, 3);
    let g4 = q.get(0, 2);
    let g5 = q.get(1, 3);
    let g6 = q.get(0, 3);
    let p = -(g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4 + g5 * g5 + g6 * g6);
    let q = -2.0 * (g1 * g2 * g4 + g1 * g5 * g6 + g2 * g3 * g5 + g3 * g4 * g6);
    let r = g1 * g1 * g3 * g3 + g2 * g2 * g6 * g6 + g4 * g4 * g5 * g5
        - 2.0 * g1 * g2 * g3 * g6
        - 2.0 * g1 * g3 * g4 * g5
        - 2.0 * g2 * g4 * g5 * g6;
    Ok(QuarticCoeffs { p, q, r })
}

fn principal_cbrt(z: C64) -> C64 {
    if z.norm() == 0.0 {
        return C64::new(0.0, 0.0);
    }
    C64::from_polar(z.norm().cbrt(), z.arg() / 3.0)
}

/// Cardano roots of `x³ − c1·x − c0` in assembly order `(α₊+α₋, σ²α₊+σα₋, σα₊+σ²α₋)`.
///
/// `α₊` is the principal cube root of the larger-modulus radicand and
/// `α₋ = (c1/3)/α₊`, which fixes the pairing `α₊α₋ = c1/3`.
fn cardano(c1: f64, c0: f64) -> [C64; 3] {
    let half = 0.5 * c0;
    let third = c1 / 3.0;
    let cube = third * third * third;
    let mut disc = half * half - cube;
    // A real symmetric source has disc <= 0, so small positive values are
    // rounding. A negative disc within a few ulps of zero is a double root
    // whose rounded coefficients would otherwise split it by ~√ε.
    let scale = (half * half).max(cube.abs());
    if (disc > 0.0 && disc <= 1e-12 * scale) || (disc < 0.0 && disc >= -1e-14 * scale) {
        disc = 0.0;
    }
    let root = C64::new(disc, 0.0).sqrt();
    let (u_plus, u_minus) = (half + root, half - root);
    let u = if u_plus.norm() >= u_minus.norm() { u_plus } else { u_minus };
    if u.norm() == 0.0 {
        // c0 = 0 and c1 = 0.
        return [C64::new(0.0, 0.0); 3];
    }
    let a_plus = principal_cbrt(u);
    let a_minus = C64::new(third, 0.0) / a_plus;
    let sigma = C64::from_polar(1.0, 2.0 * PI / 3.0);
    let sigma2 = sigma * sigma;
    [a_plus + a_minus, sigma2 * a_plus + sigma * a_minus, sigma * a_plus + sigma2 * a_minus]
}

fn real_part_checked(z: C64) -> Result<f64> {
    if z.im.abs() > IMAG_TOL * z.re.abs().max(1.0) {
        return Err(Error::NonRealRoots(format!("root {z} has imaginary part above tolerance")));
    }
    Ok(z.re)
}

/// One Newton step, kept only when it lowers the residual.
fn polish(x: f64, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> f64 {
    let fx = f(x);
    let d = df(x);
    if fx == 0.0 || d == 0.0 {
        return x;
    }
    let y = x - fx / d;
    if y.is_finite() && f(y).abs() < fx.abs() {
        y
    } else {
        x
    }
}

/// All three real roots of `λ³ − c1·λ − c0` via the Cardano formula.
pub fn solve_cubic_depressed(c: CubicCoeffs) -> Result<Spectrum> {
    if !(c.c1.is_finite() && c.c0.is_finite()) {
        return Err(Error::InvalidInput("non-finite cubic coefficients".into()));
    }
    let roots = cardano(c.c1, c.c0)
        .into_iter()
        .map(real_part_checked)
        .collect::<Result<Vec<_>>>()?;
    let polished = roots
        .into_iter()
        .map(|x| polish(x, |v| c.eval(v), |v| c.derivative(v)))
        .collect();
    Ok(Spectrum::from_values(polished))
}

/// Largest real root of the resolvent `64B³ + 32pB² − 4(4r − p²)B − q² = 0`.
fn largest_resolvent_root(c: QuarticCoeffs) -> f64 {
    let QuarticCoeffs { p, q, r } = c;
    // Monic form B³ + a2 B² + a1 B + a0, depressed by B = y − a2/3.
    let a2 = 0.5 * p;
    let a1 = (p * p - 4.0 * r) / 16.0;
    let a0 = -q * q / 64.0;
    let shift = a2 / 3.0;
    let big_p = a1 - a2 * a2 / 3.0;
    let big_r = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    let y = cardano(-big_p, -big_r)
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let resolvent = |b: f64| ((b + a2) * b + a1) * b + a0;
    let resolvent_d = |b: f64| (3.0 * b + 2.0 * a2) * b + a1;
    polish(y - shift, resolvent, resolvent_d)
}

fn solve_biquadratic(c: QuarticCoeffs) -> Result<[f64; 4]> {
    let QuarticCoeffs { p, r, .. } = c;
    let scale = p * p + r.abs();
    let mut disc = p * p - 4.0 * r;
    if disc < 0.0 {
        if disc < -1e-12 * scale {
            return Err(Error::NonRealRoots(format!("biquadratic discriminant {disc:.3e} < 0")));
        }
        disc = 0.0;
    }
    let s = disc.sqrt();
    // Stable pair of roots in μ = λ².
    let mu1 = if p <= 0.0 { 0.5 * (-p + s) } else { 0.5 * (-p - s) };
    let mu2 = if mu1 != 0.0 { r / mu1 } else { 0.0 };
    let mut out = [0.0; 4];
    for (k, mu) in [mu1, mu2].into_iter().enumerate() {
        if mu < -1e-12 * scale.sqrt().max(1.0) {
            return Err(Error::NonRealRoots(format!("biquadratic root λ² = {mu:.3e} < 0")));
        }
        let l = mu.max(0.0).sqrt();
        out[2 * k] = l;
        out[2 * k + 1] = -l;
    }
    Ok(out)
}

/// All four real roots of `λ⁴ + pλ² + qλ + r` via the Euler formula.
///
/// `β = √B` for the largest resolvent root `B`; `α²` and `γ²` solve the
/// quadratic `x² + (q/4β)x + (B + p/2)²/4 = 0`. Real roots require `γ = ᾱ`,
/// so the signs are chosen with `αγ = −(B + p/2)/2 ≥ 0`. The roots are
/// `α+β+γ`, `σ³α+σ²β+σγ`, `σ²α+β+σ²γ`, `σα+σ²β+σ³γ` with `σ = i`.
pub fn solve_quartic(c: QuarticCoeffs) -> Result<Spectrum> {
    let QuarticCoeffs { p, q, r } = c;
    if !(p.is_finite() && q.is_finite() && r.is_finite()) {
        return Err(Error::InvalidInput("non-finite quartic coefficients".into()));
    }
    let scale = 1f64.max(p.abs()).max(r.abs().sqrt());
    let roots: Vec<f64> = if q.abs() <= 1e-12 * scale {
        solve_biquadratic(c)?.to_vec()
    } else {
        let mut b = largest_resolvent_root(c);
        if b < -1e-12 * scale {
            return Err(Error::InvalidInput(format!("largest resolvent root {b:.3e} is negative")));
        }
        b = b.max(0.0);
        let beta = b.sqrt();
        if beta == 0.0 {
            return Err(Error::InvalidInput("resolvent root vanished with q != 0".into()));
        }
        let k = q / (4.0 * beta);
        let m = b + 0.5 * p;
        let mut arg = k * k - m * m;
        if arg > 0.0 && arg <= 1e-10 * (k * k + m * m) {
            arg = 0.0;
        }
        let root = C64::new(arg, 0.0).sqrt();
        let alpha = (0.5 * (-k + root)).sqrt();
        let gamma0 = (0.5 * (-k - root)).sqrt();
        let target = -0.5 * m;
        let gamma = [gamma0, -gamma0]
            .into_iter()
            .min_by(|x, y| (alpha * x - target).norm().total_cmp(&(alpha * y - target).norm()))
            .expect("two candidates");
        let mismatch = (alpha * gamma - target).norm();
        if mismatch > 1e-9 * target.abs().max(k.abs()).max(1.0) {
            return Err(Error::InvalidInput(format!(
                "no sign choice gives αγ = {target:.6e} (mismatch {mismatch:.3e})"
            )));
        }
        let i = C64::new(0.0, 1.0);
        let beta = C64::new(beta, 0.0);
        let assembled = [
            alpha + beta + gamma,
            -i * alpha - beta + i * gamma,
            -alpha + beta - gamma,
            i * alpha - beta - i * gamma,
        ];
        assembled.into_iter().map(real_part_checked).collect::<Result<Vec<_>>>()?
    };
    let polished = roots
        .into_iter()
        .map(|x| polish(x, |v| c.eval(v), |v| c.derivative(v)))
        .collect();
    Ok(Spectrum::from_values(polished))
}

/// Closed-form spectrum of `Q` for three or four levels.
pub fn closed_form_spectrum(q: &CouplingMatrix) -> Result<Spectrum> {
    match q.n() {
        3 => solve_cubic_depressed(char_poly_3(q)?),
        4 => solve_quartic(char_poly_4(q)?),
        n => Err(Error::InvalidInput(format!("no closed-form spectrum for n = {n}"))),
    }
}
