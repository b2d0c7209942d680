//! Driven level systems, their Hamiltonians, and the conditions under which
//! the rotating-frame Hamiltonian collapses to the constant matrix `Q`.

use std::fmt;

use indexmap::IndexMap;
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dagger, CMatrix, CVector};
use crate::oracle::TimeSeries;
use crate::propagator::{self, Method};

/// Relative tolerance applied to the largest drive frequency when the caller
/// does not supply one.
pub const DEFAULT_CONDITION_RTOL: f64 = 1e-9;

/// One laser field coupling levels `i < j`.
///
/// `g` is the coupling after the rotating-wave redefinition `g/2 -> g`, so the
/// RWA matrix element is `g e^{iωt}` and the full drive is `2g cos(ωt + φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drive {
    pub i: usize,
    pub j: usize,
    pub g: f64,
    pub omega: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub phi: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl Drive {
    pub fn new(i: usize, j: usize, g: f64, omega: f64) -> Self {
        Self { i, j, g, omega, phi: 0.0 }
    }

    pub fn with_phase(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }
}

/// An atom truncated to its `n` lowest levels with one drive per level pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSystem {
    energies: Vec<f64>,
    // Upper-triangular pairs in row-major order: (0,1), (0,2), ..., (n-2,n-1).
    drives: Vec<Drive>,
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl LevelSystem {
    pub fn new(energies: Vec<f64>, drives: Vec<Drive>) -> Result<Self> {
        let n = energies.len();
        if n < 2 {
            return Err(Error::InvalidSystem(format!("need at least 2 levels, got {n}")));
        }
        if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
            return Err(Error::InvalidSystem(format!("non-finite energy {e}")));
        }
        for k in 1..n {
            if energies[k] <= energies[k - 1] {
                return Err(Error::InvalidSystem(format!(
                    "energies must be strictly increasing: E_{} = {} <= E_{} = {}",
                    k,
                    energies[k],
                    k - 1,
                    energies[k - 1]
                )));
            }
        }
        let pairs = n * (n - 1) / 2;
        if drives.len() != pairs {
            return Err(Error::InvalidSystem(format!(
                "expected {pairs} couplings for {n} levels, got {}",
                drives.len()
            )));
        }
        let mut slots: Vec<Option<Drive>> = vec![None; pairs];
        for d in drives {
            if d.i >= d.j || d.j >= n {
                return Err(Error::InvalidSystem(format!(
                    "coupling ({}, {}) must satisfy i < j < {n}",
                    d.i, d.j
                )));
            }
            if !(d.g.is_finite() && d.omega.is_finite() && d.phi.is_finite()) {
                return Err(Error::InvalidSystem(format!(
                    "coupling ({}, {}) has non-finite parameters",
                    d.i, d.j
                )));
            }
            if d.g < 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "coupling ({}, {}) has negative g = {}",
                    d.i, d.j, d.g
                )));
            }
            let slot = &mut slots[pair_index(n, d.i, d.j)];
            if slot.is_some() {
                return Err(Error::InvalidSystem(format!("duplicate coupling ({}, {})", d.i, d.j)));
            }
            *slot = Some(d);
        }
        // Every slot is filled: the count matched and there were no duplicates.
        let drives = slots.into_iter().map(|d| d.expect("pair filled")).collect();
        Ok(Self { energies, drives })
    }

    /// A system whose drive frequencies are the level spacings `E_j − E_i`,
    /// so both the resonance and consistency conditions hold exactly.
    pub fn with_consistent_drives(
        energies: Vec<f64>,
        coupling: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let n = energies.len();
        let mut drives = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                drives.push(Drive::new(i, j, coupling(i, j), energies[j] - energies[i]));
            }
        }
        Self::new(energies, drives)
    }

    pub fn n(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn drives(&self) -> &[Drive] {
        &self.drives
    }

    /// Drive coupling levels `i` and `j` in either order.
    pub fn drive(&self, i: usize, j: usize) -> &Drive {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        &self.drives[pair_index(self.n(), a, b)]
    }

    /// `Δ_j = E_j − E_0`.
    pub fn detunings(&self) -> Vec<f64> {
        self.energies.iter().map(|e| e - self.energies[0]).collect()
    }

    /// Sequential drive frequencies `ω_l = ω_{l−1,l}` for `l = 1..n−1`.
    pub fn ladder_frequencies(&self) -> Vec<f64> {
        (1..self.n()).map(|l| self.drive(l - 1, l).omega).collect()
    }

    /// Cumulative frame phases `(0, ω_1, ω_1 + ω_2, ...)`.
    pub fn frame_frequencies(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for w in self.ladder_frequencies() {
            acc += w;
            out.push(acc);
        }
        out
    }

    pub fn max_drive_frequency(&self) -> f64 {
        self.drives.iter().map(|d| d.omega.abs()).fold(0.0, f64::max)
    }

    pub fn max_coupling(&self) -> f64 {
        self.drives.iter().map(|d| d.g).fold(0.0, f64::max)
    }

    /// The same system with every phase set to zero.
    pub fn without_phases(&self) -> Self {
        let drives = self.drives.iter().map(|d| Drive { phi: 0.0, ..*d }).collect();
        Self { energies: self.energies.clone(), drives }
    }

    pub fn has_phases(&self) -> bool {
        self.drives.iter().any(|d| d.phi != 0.0)
    }

    /// Absolute tolerance corresponding to `rtol` times the largest drive frequency.
    pub fn condition_tolerance(&self, rtol: f64) -> f64 {
        let scale = self.max_drive_frequency();
        if scale > 0.0 {
            rtol * scale
        } else {
            rtol
        }
    }
}

/// The real symmetric zero-diagonal matrix of coupling constants.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    entries: Array2<f64>,
}

impl CouplingMatrix {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(Error::DimensionMismatch { expected: rows, actual: cols });
        }
        if rows < 2 {
            return Err(Error::InvalidInput(format!("coupling matrix must be at least 2x2, got {rows}x{rows}")));
        }
        for i in 0..rows {
            if entries[[i, i]] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal entry at ({i}, {i})")));
            }
            for j in i + 1..rows {
                let v = entries[[i, j]];
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!("non-finite entry at ({i}, {j})")));
                }
                if v != entries[[j, i]] {
                    return Err(Error::InvalidInput(format!("entries ({i}, {j}) and ({j}, {i}) differ")));
                }
            }
        }
        Ok(Self { entries })
    }

    /// Builds `Q` from the strict upper triangle listed row by row.
    pub fn from_upper(n: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::DimensionMismatch {
                expected: n * n.saturating_sub(1) / 2,
                actual: upper.len(),
            });
        }
        let mut m = Array2::zeros((n, n));
        let mut it = upper.iter();
        for i in 0..n {
            for j in i + 1..n {
                let v = *it.next().expect("length checked");
                m[[i, j]] = v;
                m[[j, i]] = v;
            }
        }
        Self::new(m)
    }

    /// `g R` with `R` the all-ones matrix minus the identity.
    pub fn equal(n: usize, g: f64) -> Result<Self> {
        Self::from_upper(n, &vec![g; n * n.saturating_sub(1) / 2])
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[[i, j]]
    }

    pub fn frobenius(&self) -> f64 {
        crate::linalg::frobenius_real(&self.entries)
    }

    /// Largest absolute row sum, a Gershgorin bound on the spectral radius.
    pub fn gershgorin_radius(&self) -> f64 {
        self.entries
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// The common coupling when every off-diagonal entry agrees to 1e-12 relative.
    pub fn equal_coupling(&self) -> Option<f64> {
        let n = self.n();
        let g = self.entries[[0, 1]];
        let tol = 1e-12 * g.abs();
        for i in 0..n {
            for j in i + 1..n {
                if (self.entries[[i, j]] - g).abs() > tol {
                    return None;
                }
            }
        }
        Some(g)
    }

    pub fn to_complex(&self) -> CMatrix {
        crate::linalg::to_complex(&self.entries)
    }
}

/// `Q[i][j] = g_ij` off the diagonal, zero on it.
pub fn build_q(system: &LevelSystem) -> CouplingMatrix {
    let n = system.n();
    let mut m = Array2::zeros((n, n));
    for d in system.drives() {
        m[[d.i, d.j]] = d.g;
        m[[d.j, d.i]] = d.g;
    }
    CouplingMatrix { entries: m }
}

/// Residuals of a family of exact-equality conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub satisfied: bool,
    pub residuals: IndexMap<String, f64>,
    pub worst: f64,
    pub tolerance: f64,
}

impl ConditionReport {
    fn from_residuals(residuals: IndexMap<String, f64>, tolerance: f64) -> Self {
        let worst = residuals.values().copied().fold(0.0, f64::max);
        Self { satisfied: worst <= tolerance, residuals, worst, tolerance }
    }

    /// Union of two reports; satisfied only when both are.
    pub fn merge(mut self, other: ConditionReport) -> Self {
        self.residuals.extend(other.residuals);
        self.worst = self.worst.max(other.worst);
        self.tolerance = self.tolerance.min(other.tolerance);
        self.satisfied = self.satisfied && other.satisfied;
        self
    }

    /// Entries whose residual exceeds the tolerance.
    pub fn violations(&self) -> impl Iterator<Item = (&str, f64)> {
        self.residuals
            .iter()
            .filter(move |(_, r)| **r > self.tolerance)
            .map(|(k, r)| (k.as_str(), *r))
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (label, r) in &self.residuals {
            let mark = if *r <= self.tolerance { "ok" } else { "VIOLATED" };
            writeln!(f, "  {label:<16} {r:>12.3e}  {mark}")?;
        }
        Ok(())
    }
}

/// `|ω_{j−1,j} − (E_j − E_{j−1})|` for each sequential pair.
pub fn check_resonance(system: &LevelSystem, tol: f64) -> ConditionReport {
    let e = system.energies();
    let residuals = (1..system.n())
        .map(|j| {
            let r = (system.drive(j - 1, j).omega - (e[j] - e[j - 1])).abs();
            (format!("res({},{})", j - 1, j), r)
        })
        .collect();
    ConditionReport::from_residuals(residuals, tol)
}

/// `ε_ij = |ω_ij − (ω_{i+1} + … + ω_j)|` for every pair with `j − i ≥ 2`.
pub fn check_consistency(system: &LevelSystem, tol: f64) -> ConditionReport {
    let n = system.n();
    let ladder = system.ladder_frequencies();
    let mut residuals = IndexMap::new();
    for i in 0..n {
        for j in i + 2..n {
            let span: f64 = ladder[i..j].iter().sum();
            residuals.insert(format!("eps({i},{j})"), (system.drive(i, j).omega - span).abs());
        }
    }
    ConditionReport::from_residuals(residuals, tol)
}

/// Resonance and consistency residuals in one report.
pub fn check_conditions(system: &LevelSystem, tol: f64) -> ConditionReport {
    check_resonance(system, tol).merge(check_consistency(system, tol))
}

/// `U(t) = diag(1, e^{−iω_1 t}, e^{−i(ω_1+ω_2)t}, …)`.
pub fn frame_matrix(system: &LevelSystem, t: f64) -> CMatrix {
    let phases: Vec<C64> = system
        .frame_frequencies()
        .iter()
        .map(|w| C64::from_polar(1.0, -w * t))
        .collect();
    Array2::from_diag(&Array1::from(phases))
}

/// Lab-frame RWA Hamiltonian `H_0 + V(t)` with `V_ij = g_ij e^{iω_ij t}` above
/// the diagonal.
pub fn hamiltonian_rwa(system: &LevelSystem, t: f64) -> Result<CMatrix> {
    if system.has_phases() {
        return Err(Error::UnsupportedPhases);
    }
    let n = system.n();
    let mut h = Array2::zeros((n, n));
    for (k, d) in system.detunings().into_iter().enumerate() {
        h[[k, k]] = C64::new(d, 0.0);
    }
    for d in system.drives() {
        let v = C64::from_polar(d.g, d.omega * t);
        h[[d.i, d.j]] = v;
        h[[d.j, d.i]] = v.conj();
    }
    Ok(h)
}

/// Hamiltonian without the rotating-wave approximation: `H_0` plus real
/// off-diagonal drives `2 g_ij cos(ω_ij t + φ_ij)`.
pub fn hamiltonian_full(system: &LevelSystem, t: f64) -> CMatrix {
    let n = system.n();
    let mut h = Array2::zeros((n, n));
    for (k, d) in system.detunings().into_iter().enumerate() {
        h[[k, k]] = C64::new(d, 0.0);
    }
    for d in system.drives() {
        let v = C64::new(2.0 * d.g * (d.omega * t + d.phi).cos(), 0.0);
        h[[d.i, d.j]] = v;
        h[[d.j, d.i]] = v;
    }
    h
}

/// `U† H_rwa U − diag(0, ω_1, ω_1 + ω_2, …)`, the generator for `Ψ̃ = U†Ψ`.
///
/// Off the diagonal this is `g_ij e^{iε_ij t}`; on it, `Δ_j − (ω_1 + … + ω_j)`.
pub fn rotating_frame_hamiltonian(system: &LevelSystem, t: f64) -> Result<CMatrix> {
    let u = frame_matrix(system, t);
    let mut h = dagger(&u).dot(&hamiltonian_rwa(system, t)?).dot(&u);
    for (k, w) in system.frame_frequencies().into_iter().enumerate() {
        h[[k, k]] -= C64::new(w, 0.0);
    }
    Ok(h)
}

/// A normalized complex amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    /// Wraps amplitudes that are already unit norm to within 1e-12.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = crate::linalg::vector_norm(&amplitudes);
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self(amplitudes))
    }

    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = crate::linalg::vector_norm(&amplitudes);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidState(format!("cannot normalize vector of norm {norm}")));
        }
        Ok(Self(amplitudes / C64::new(norm, 0.0)))
    }

    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::InvalidState(format!("basis index {k} out of range for {n} levels")));
        }
        let mut v = Array1::zeros(n);
        v[k] = C64::new(1.0, 0.0);
        Ok(Self(v))
    }

    /// Wraps the result of evolving a unit vector, without re-checking the norm.
    pub(crate) fn from_evolved(amplitudes: CVector) -> Self {
        Self(amplitudes)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::vector_norm(&self.0)
    }

    pub fn populations(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Euclidean distance between amplitude vectors.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn require_closed_form(system: &LevelSystem, psi0: &StateVector) -> Result<()> {
    if psi0.dim() != system.n() {
        return Err(Error::DimensionMismatch { expected: system.n(), actual: psi0.dim() });
    }
    if system.has_phases() {
        return Err(Error::UnsupportedPhases);
    }
    let report = check_conditions(system, system.condition_tolerance(DEFAULT_CONDITION_RTOL));
    if !report.satisfied {
        return Err(Error::ConditionViolation(report));
    }
    Ok(())
}

/// `Ψ(t) = U(t) exp(−itQ) Ψ(0)`, valid under the resonance and consistency
/// conditions with all phases zero.
pub fn full_solution(
    system: &LevelSystem,
    psi0: &StateVector,
    t: f64,
    method: Option<Method>,
) -> Result<StateVector> {
    require_closed_form(system, psi0)?;
    let q = build_q(system);
    let p = propagator::propagator(&q, t, method)?;
    let psi = frame_matrix(system, t).dot(&p.matrix.dot(psi0.amplitudes()));
    Ok(StateVector::from_evolved(psi))
}

/// [`full_solution`] over a time grid.
pub fn full_solution_series(
    system: &LevelSystem,
    psi0: &StateVector,
    times: &[f64],
    method: Option<Method>,
) -> Result<TimeSeries> {
    require_closed_form(system, psi0)?;
    let q = build_q(system);
    let states = times
        .iter()
        .map(|&t| {
            let p = propagator::propagator(&q, t, method)?;
            let psi = frame_matrix(system, t).dot(&p.matrix.dot(psi0.amplitudes()));
            Ok(StateVector::from_evolved(psi))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries::new(times.to_vec(), states))
}
