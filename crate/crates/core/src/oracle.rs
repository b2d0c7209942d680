//! Numerical ground truth: fourth-order Runge–Kutta integration of
//! `i dΨ/dt = H(t)Ψ` and a Taylor scaling-and-squaring matrix exponential.
//!
//! Nothing here depends on the closed-form propagators, so every closed-form
//! result can be checked against it.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_residual, identity, inf_norm, vector_norm, CMatrix, CVector};
use crate::model::{hamiltonian_full, hamiltonian_rwa, LevelSystem, StateVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    /// Initial step, or the fixed step when `adaptive` is off.
    pub dt: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Rescale to unit norm after every accepted step.
    pub renormalize: bool,
    /// Step-doubling error control with local extrapolation; when false every
    /// step is a plain RK4 step of exactly `dt` (clipped to land on sample times).
    pub adaptive: bool,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_steps: 10_000_000,
            renormalize: false,
            adaptive: true,
        }
    }
}

impl IntegrationConfig {
    pub fn fixed(dt: f64) -> Self {
        Self { dt, adaptive: false, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("step size must be positive, got {}", self.dt)));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidInput("integration tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Sampled trajectory of a state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// `|Ψ_j(t_k)|²`, one row per sample.
    pub populations: Array2<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, states: Vec<StateVector>) -> Self {
        let n = states.first().map_or(0, StateVector::dim);
        let mut populations = Array2::zeros((states.len(), n));
        for (k, s) in states.iter().enumerate() {
            for (j, p) in s.populations().into_iter().enumerate() {
                populations[[k, j]] = p;
            }
        }
        Self { times, states, populations }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `|‖Ψ(t_k)‖ − 1|`.
    pub fn norm_drift(&self) -> f64 {
        self.states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Largest sample-wise Euclidean distance between two trajectories.
    pub fn max_distance(&self, other: &TimeSeries) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }

    /// Largest sample-wise absolute population difference.
    pub fn max_population_diff(&self, other: &TimeSeries) -> f64 {
        self.populations
            .iter()
            .zip(other.populations.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `n` evenly spaced times from 0 to `t_end` inclusive.
pub fn sample_times(t_end: f64, samples: usize) -> Vec<f64> {
    if samples <= 1 {
        return vec![0.0];
    }
    let last = (samples - 1) as f64;
    (0..samples)
        .map(|k| if k + 1 == samples { t_end } else { t_end * k as f64 / last })
        .collect()
}

fn derivative(h: &CMatrix, y: &CVector) -> CVector {
    h.dot(y).mapv(|z| C64::new(z.im, -z.re))
}

fn rk4_step<F: Fn(f64) -> CMatrix>(ham: &F, y: &CVector, t: f64, dt: f64) -> CVector {
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let h_mid = ham(t + 0.5 * dt);
    let k1 = derivative(&ham(t), y);
    let k2 = derivative(&h_mid, &(y + &(&k1 * half)));
    let k3 = derivative(&h_mid, &(y + &(&k2 * half)));
    let k4 = derivative(&ham(t + dt), &(y + &(&k3 * full)));
    let sixth = C64::new(dt / 6.0, 0.0);
    y + &((k1 + &(k2 * 2.0) + &(k3 * 2.0) + k4) * sixth)
}

fn check_hermitian(h: &CMatrix, t: f64) -> Result<()> {
    let residual = hermitian_residual(h);
    let scale = inf_norm(h).max(1.0);
    if residual.is_nan() || residual > 1e-12 * scale {
        return Err(Error::NonHermitian { t, residual });
    }
    Ok(())
}

/// Integrates `i dΨ/dt = H(t)Ψ` from 0 to `t_end`, recording `samples` evenly
/// spaced states including both endpoints.
pub fn integrate_schrodinger<F>(
    ham: F,
    psi0: &StateVector,
    t_end: f64,
    samples: usize,
    cfg: &IntegrationConfig,
) -> Result<TimeSeries>
where
    F: Fn(f64) -> CMatrix,
{
    cfg.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput(format!("t_end must be positive, got {t_end}")));
    }
    if samples < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 samples, got {samples}")));
    }
    for t in [0.0, t_end] {
        let h = ham(t);
        if h.dim() != (psi0.dim(), psi0.dim()) {
            return Err(Error::DimensionMismatch { expected: psi0.dim(), actual: h.nrows() });
        }
        check_hermitian(&h, t)?;
    }

    let times = sample_times(t_end, samples);
    let mut states = Vec::with_capacity(samples);
    let mut y = psi0.amplitudes().clone();
    let mut t = 0.0;
    let mut step = cfg.dt.min(t_end);
    let mut attempts = 0usize;
    states.push(psi0.clone());

    for &target in &times[1..] {
        let eps = 1e-14 * target.abs().max(1.0);
        while target - t > eps {
            attempts += 1;
            if attempts > cfg.max_steps {
                return Err(Error::MaxStepsExceeded { t, steps: cfg.max_steps });
            }
            let clipped = target - t <= step;
            let dt = if clipped { target - t } else { step };

            let next = if cfg.adaptive {
                let coarse = rk4_step(&ham, &y, t, dt);
                let mid = rk4_step(&ham, &y, t, 0.5 * dt);
                let fine = rk4_step(&ham, &mid, t + 0.5 * dt, 0.5 * dt);
                let diff = &fine - &coarse;
                let err = vector_norm(&diff) / 15.0;
                let tol = cfg.abs_tol + cfg.rel_tol * vector_norm(&fine);
                let factor = if err == 0.0 { 5.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0) };
                if err > tol {
                    step = dt * factor;
                    continue;
                }
                // A clipped step says nothing about the natural step size.
                step = if clipped { step.max(dt * factor) } else { dt * factor };
                // Local extrapolation cancels the leading error term.
                fine + &(diff / C64::new(15.0, 0.0))
            } else {
                rk4_step(&ham, &y, t, dt)
            };

            y = next;
            t = if clipped { target } else { t + dt };
            if cfg.renormalize {
                let norm = vector_norm(&y);
                y.mapv_inplace(|z| z / norm);
            }
            if cfg.adaptive {
                check_hermitian(&ham(t), t)?;
            }
        }
        t = target;
        states.push(StateVector::from_evolved(y.clone()));
    }
    Ok(TimeSeries::new(times, states))
}

/// Largest distance between the states evolved under the full (cosine) and
/// RWA Hamiltonians from the same initial state. The RWA run drops phases.
pub fn rwa_error(
    system: &LevelSystem,
    psi0: &StateVector,
    t_end: f64,
    samples: usize,
    cfg: &IntegrationConfig,
) -> Result<f64> {
    let full = integrate_schrodinger(|t| hamiltonian_full(system, t), psi0, t_end, samples, cfg)?;
    let rwa_system = system.without_phases();
    // Phases were dropped, so this cannot fail.
    let rwa = integrate_schrodinger(
        |t| hamiltonian_rwa(&rwa_system, t).expect("phase-free system"),
        psi0,
        t_end,
        samples,
        cfg,
    )?;
    Ok(full.max_distance(&rwa))
}

const TAYLOR_DEGREE: usize = 12;
const MAX_EXPM_NORM: f64 = 1e6;

/// `exp(A)` by a degree-12 Taylor polynomial on `A/2^s` with `‖A/2^s‖∞ ≤ 1/2`,
/// followed by `s` squarings.
pub fn reference_expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: a.ncols() });
    }
    if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let norm = inf_norm(a);
    if norm > MAX_EXPM_NORM {
        return Err(Error::NormTooLarge(norm));
    }
    let mut squarings = 0;
    let mut scaled_norm = norm;
    while scaled_norm > 0.5 {
        scaled_norm *= 0.5;
        squarings += 1;
    }
    let scaled = a.mapv(|z| z / 2f64.powi(squarings));

    // Horner: I + X(I + X/2(I + X/3(…)))
    let eye = identity(n);
    let mut acc = eye.clone();
    for k in (1..=TAYLOR_DEGREE).rev() {
        acc = &eye + &(scaled.dot(&acc) / C64::new(k as f64, 0.0));
    }
    for _ in 0..squarings {
        acc = acc.dot(&acc);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, to_complex};
    use crate::model::Drive;

    #[test]
    fn expm_of_zero_and_diagonal() {
        let z = Array2::zeros((3, 3));
        assert_eq!(reference_expm(&z).unwrap(), identity(3));

        let t = 2.3;
        let lambdas = [1.7, -0.2, 0.9];
        let a = Array2::from_diag(&ndarray::arr1(&lambdas.map(|l| C64::new(0.0, -t * l))));
        let e = reference_expm(&a).unwrap();
        for (k, l) in lambdas.iter().enumerate() {
            assert!((e[[k, k]] - C64::from_polar(1.0, -t * l)).norm() < 1e-12);
        }
        assert!(max_abs_diff(&e, &Array2::from_diag(&e.diag().to_owned())) == 0.0);
    }

    #[test]
    fn expm_rejects_huge_norm() {
        let a = identity(2).mapv(|z| z * 2e6);
        assert!(matches!(reference_expm(&a), Err(Error::NormTooLarge(_))));
    }

    #[test]
    fn diagonal_evolution() {
        let (d1, d2) = (0.8, 2.1);
        let h = to_complex(&Array2::from_diag(&ndarray::arr1(&[0.0, d1, d2])));
        let psi0 = StateVector::basis(3, 1).unwrap();
        let ts = integrate_schrodinger(|_| h.clone(), &psi0, 5.0, 11, &IntegrationConfig::default()).unwrap();
        for (t, s) in ts.times.iter().zip(&ts.states) {
            let a = s.amplitudes();
            let err = (a[1] - C64::from_polar(1.0, -d1 * t)).norm();
            assert!(err < 1e-8, "t = {t}: {err:.3e}");
            assert_eq!(a[0], C64::new(0.0, 0.0));
        }
        for row in ts.populations.rows() {
            assert!((row[1] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let h = identity(2);
        let psi0 = StateVector::basis(2, 0).unwrap();
        let cfg = IntegrationConfig::default();
        assert!(integrate_schrodinger(|_| h.clone(), &psi0, 0.0, 10, &cfg).is_err());
        assert!(integrate_schrodinger(|_| h.clone(), &psi0, 1.0, 1, &cfg).is_err());
        let bad = IntegrationConfig { dt: -1.0, ..cfg };
        assert!(integrate_schrodinger(|_| h.clone(), &psi0, 1.0, 10, &bad).is_err());
        let tiny = IntegrationConfig { max_steps: 3, ..IntegrationConfig::fixed(1e-3) };
        assert!(matches!(
            integrate_schrodinger(|_| h.clone(), &psi0, 1.0, 2, &tiny),
            Err(Error::MaxStepsExceeded { .. })
        ));
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut h = identity(2);
        h[[0, 1]] = C64::new(1.0, 0.0);
        let psi0 = StateVector::basis(2, 0).unwrap();
        assert!(matches!(
            integrate_schrodinger(|_| h.clone(), &psi0, 1.0, 2, &IntegrationConfig::default()),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn sample_grid_hits_endpoints() {
        let ts = sample_times(3.0, 4);
        assert_eq!(ts, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(sample_times(0.0, 5), vec![0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rwa_error_accepts_phases() {
        let sys = LevelSystem::new(vec![0.0, 10.0], vec![Drive::new(0, 1, 0.1, 10.0).with_phase(0.4)]).unwrap();
        let psi0 = StateVector::basis(2, 0).unwrap();
        let err = rwa_error(&sys, &psi0, 5.0, 11, &IntegrationConfig::default()).unwrap();
        assert!(err.is_finite() && err >= 0.0);
    }
}
