//! Command-line front end: `simulate`, `verify`, `eigen`, `compare`.
//!
//! Exit codes: 0 on success, 1 on I/O, parse or usage errors, 2 when the
//! resonance or consistency conditions do not hold.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::model::{
    build_q, check_consistency, check_resonance, full_solution_series, hamiltonian_full, hamiltonian_rwa,
    ConditionReport, LevelSystem, DEFAULT_CONDITION_RTOL,
};
use crate::oracle::{integrate_schrodinger, IntegrationConfig, TimeSeries};
use crate::propagator::{eigenvectors_three_level, jacobi_eigendecompose, Method};
use crate::roots::closed_form_spectrum;
use crate::scenario::{format_float, write_output, write_series_csv, Output, Scenario};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONDITIONS: u8 = 2;

/// RK4 tolerances for `compare`. Tighter than the library defaults so the
/// integrated population rows stay within 1e-8 of unit sum over long runs.
pub const CLI_REL_TOL: f64 = 1e-10;
pub const CLI_ABS_TOL: f64 = 1e-13;

#[derive(Debug, Parser)]
#[command(name = "nlevel", version, about = "Driven n-level atom propagators and simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the initial state with the closed-form propagator and write a CSV.
    Simulate(SimulateArgs),
    /// Report the resonance and consistency residuals.
    Verify(ScenarioArg),
    /// Compare the closed-form spectrum of Q with Jacobi diagonalization.
    Eigen(ScenarioArg),
    /// Closed form vs RK4 on the RWA Hamiltonian vs RK4 on the full Hamiltonian.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArg {
    /// Scenario JSON file.
    pub scenario: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub scenario: PathBuf,
    /// Propagator method, or `auto`; overrides the scenario file.
    #[arg(long)]
    pub method: Option<String>,
    /// Output CSV path (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub method: Option<String>,
    /// Relative tolerance of the RK4 step control [default: 1e-10].
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute tolerance of the RK4 step control [default: 1e-13].
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_FAILURE
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Verify(a) => verify(&a.scenario),
        Command::Eigen(a) => eigen(&a.scenario),
        Command::Compare(a) => compare(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

fn load(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn method_override(flag: Option<&str>, scenario: Option<Method>) -> Result<Option<Method>> {
    match flag {
        None => Ok(scenario),
        Some("auto") => Ok(None),
        Some(name) => name.parse().map(Some).map_err(anyhow::Error::msg),
    }
}

fn conditions(system: &LevelSystem) -> (ConditionReport, ConditionReport) {
    let tol = system.condition_tolerance(DEFAULT_CONDITION_RTOL);
    (check_resonance(system, tol), check_consistency(system, tol))
}

fn report_violation(report: &ConditionReport) {
    eprintln!(
        "condition violation: worst residual {:.3e} exceeds tolerance {:.3e}",
        report.worst, report.tolerance
    );
    eprint!("{report}");
}

fn condition_footer(system: &LevelSystem) -> Vec<String> {
    let (res, cons) = conditions(system);
    res.residuals
        .iter()
        .chain(cons.residuals.iter())
        .map(|(label, r)| format!("{label}: {}", format_float(*r)))
        .collect()
}

/// Propagator at `t_end` as `propagator[i][j]: re im` lines.
fn propagator_footer(scenario: &Scenario, method: Option<Method>) -> Result<Vec<String>> {
    let p = crate::propagator::propagator(&build_q(&scenario.system), scenario.t_end, method)?;
    let mut lines = vec![format!("propagator method: {}", p.method)];
    for ((i, j), z) in p.matrix.indexed_iter() {
        lines.push(format!("propagator[{i}][{j}]: {} {}", format_float(z.re), format_float(z.im)));
    }
    Ok(lines)
}

fn simulate(args: &SimulateArgs) -> Result<u8> {
    let scenario = load(&args.scenario)?;
    let method = method_override(args.method.as_deref(), scenario.method)?;
    let psi0 = scenario.initial_state()?;
    let series = match full_solution_series(&scenario.system, &psi0, &scenario.times(), method) {
        Ok(s) => s,
        Err(Error::ConditionViolation(report)) => {
            report_violation(&report);
            return Ok(EXIT_CONDITIONS);
        }
        Err(e) => return Err(e.into()),
    };
    let mut footer = Vec::new();
    if scenario.wants(Output::Conditions) {
        footer.extend(condition_footer(&scenario.system));
    }
    if scenario.wants(Output::Propagator) {
        footer.extend(propagator_footer(&scenario, method)?);
    }
    let mut buf = Vec::new();
    write_series_csv(
        &mut buf,
        &series,
        scenario.wants(Output::Populations),
        scenario.wants(Output::Amplitudes),
        &footer,
    )?;
    write_output(args.out.as_deref(), &buf).context("writing output")?;
    Ok(EXIT_OK)
}

fn verify_text(system: &LevelSystem) -> (String, bool) {
    let (res, cons) = conditions(system);
    let mut out = String::new();
    for (name, report) in [("resonance", &res), ("consistency", &cons)] {
        let status = if report.satisfied { "OK" } else { "VIOLATED" };
        let _ = writeln!(out, "{name}: {status} (worst {:.1e})", report.worst);
        let _ = write!(out, "{report}");
    }
    let _ = writeln!(out, "tolerance: {:.3e}", res.tolerance);
    (out, res.satisfied && cons.satisfied)
}

fn verify(path: &Path) -> Result<u8> {
    let scenario = load(path)?;
    let (text, ok) = verify_text(&scenario.system);
    print!("{text}");
    Ok(if ok { EXIT_OK } else { EXIT_CONDITIONS })
}

fn eigen_text(system: &LevelSystem) -> Result<String> {
    let q = build_q(system);
    let n = q.n();
    let jacobi = jacobi_eigendecompose(&q)?;
    let closed = match n {
        2 => Ok(vec![q.get(0, 1), -q.get(0, 1)]),
        3 | 4 => closed_form_spectrum(&q).map(|s| s.eigenvalues).map_err(|e| e.to_string()),
        _ => Err(format!("no closed form for n = {n}")),
    };

    let mut out = String::new();
    writeln!(out, "n = {n}")?;
    writeln!(out, "{:>4}  {:>24}  {:>24}  {:>10}", "k", "closed-form", "jacobi", "difference")?;
    for (k, lj) in jacobi.spectrum.eigenvalues.iter().enumerate() {
        match &closed {
            Ok(values) => {
                let lc = values[k];
                writeln!(out, "{k:>4}  {:>24}  {:>24}  {:>10.3e}", format_float(lc), format_float(*lj), (lc - lj).abs())?
            }
            Err(_) => writeln!(out, "{k:>4}  {:>24}  {:>24}  {:>10}", "unavailable", format_float(*lj), "-")?,
        }
    }
    if let Err(reason) = &closed {
        writeln!(out, "closed-form: unavailable ({reason})")?;
    }
    writeln!(out, "degeneracy gap: {:.3e}", jacobi.spectrum.degeneracy_gap)?;

    if n == 3 {
        let vectors = closed_form_spectrum(&q).and_then(|s| eigenvectors_three_level(&q, &s));
        match vectors {
            Ok(d) => {
                writeln!(out, "eigenvectors (columns):")?;
                for (k, lambda) in d.spectrum.eigenvalues.iter().enumerate() {
                    let col: Vec<String> = d.vectors.column(k).iter().map(|&x| format_float(x)).collect();
                    writeln!(out, "  {}: [{}]", format_float(*lambda), col.join(", "))?;
                }
            }
            Err(e) => writeln!(out, "eigenvectors: unavailable ({e})")?,
        }
    }
    Ok(out)
}

fn eigen(path: &Path) -> Result<u8> {
    let scenario = load(path)?;
    print!("{}", eigen_text(&scenario.system)?);
    Ok(EXIT_OK)
}

fn compare(args: &CompareArgs) -> Result<u8> {
    let scenario = load(&args.scenario)?;
    let method = method_override(args.method.as_deref(), scenario.method)?;
    let psi0 = scenario.initial_state()?;
    let system = &scenario.system;
    let times = scenario.times();

    let closed = match full_solution_series(system, &psi0, &times, method) {
        Ok(s) => s,
        Err(Error::ConditionViolation(report)) => {
            report_violation(&report);
            return Ok(EXIT_CONDITIONS);
        }
        Err(e) => return Err(e.into()),
    };

    let cfg = IntegrationConfig {
        rel_tol: args.rtol.unwrap_or(CLI_REL_TOL),
        abs_tol: args.atol.unwrap_or(CLI_ABS_TOL),
        ..IntegrationConfig::default()
    };
    let (rwa, full) = if scenario.t_end == 0.0 {
        let single = TimeSeries::new(vec![0.0], vec![psi0.clone()]);
        (single.clone(), single)
    } else {
        // Phase-free by the closed-form check above.
        let rwa = integrate_schrodinger(
            |t| hamiltonian_rwa(system, t).expect("phase-free system"),
            &psi0,
            scenario.t_end,
            times.len(),
            &cfg,
        )?;
        let full = integrate_schrodinger(|t| hamiltonian_full(system, t), &psi0, scenario.t_end, times.len(), &cfg)?;
        (rwa, full)
    };

    let n = system.n();
    let mut csv = String::from("t");
    for label in ["closed", "rwa", "full"] {
        for j in 0..n {
            write!(csv, ",{label}_pop_{j}")?;
        }
    }
    csv.push('\n');
    for (k, t) in times.iter().enumerate() {
        csv.push_str(&format_float(*t));
        for series in [&closed, &rwa, &full] {
            for p in series.populations.row(k) {
                write!(csv, ",{}", format_float(*p))?;
            }
        }
        csv.push('\n');
    }
    let pairs = [("closed-rwa", &closed, &rwa), ("closed-full", &closed, &full), ("rwa-full", &rwa, &full)];
    for (label, a, b) in pairs {
        writeln!(
            csv,
            "# max population deviation {label}: {}; max state distance: {}",
            format_float(a.max_population_diff(b)),
            format_float(a.max_distance(b))
        )?;
    }
    write_output(args.out.as_deref(), csv.as_bytes()).context("writing output")?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Drive;

    fn three_level(omega02: f64) -> LevelSystem {
        LevelSystem::new(
            vec![0.0, 1.0, 3.0],
            vec![Drive::new(0, 1, 1.0, 1.0), Drive::new(0, 2, 1.0, omega02), Drive::new(1, 2, 1.0, 2.0)],
        )
        .unwrap()
    }

    #[test]
    fn verify_consistent() {
        let (text, ok) = verify_text(&three_level(3.0));
        assert!(ok);
        assert!(text.contains("consistency: OK (worst 0.0e0)"), "{text}");
    }

    #[test]
    fn verify_detuned_lists_pair() {
        let (text, ok) = verify_text(&three_level(3.5));
        assert!(!ok);
        assert!(text.contains("consistency: VIOLATED (worst 5.0e-1)"), "{text}");
        assert!(text.contains("eps(0,2)"));
    }

    #[test]
    fn eigen_equal_coupling() {
        let text = eigen_text(&three_level(3.0)).unwrap();
        assert!(text.contains("2.0000000000000000e0"), "{text}");
        assert!(text.contains("eigenvectors: unavailable"), "{text}");
    }

    #[test]
    fn eigen_five_levels_marks_closed_form_unavailable() {
        let sys = LevelSystem::with_consistent_drives(vec![0.0, 1.0, 2.5, 4.0, 7.0], |_, _| 0.5).unwrap();
        let text = eigen_text(&sys).unwrap();
        assert!(text.contains("closed-form: unavailable"), "{text}");
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(main_with_args(["nlevel", "bogus"]), EXIT_FAILURE);
        assert_eq!(main_with_args(["nlevel", "--help"]), EXIT_OK);
        assert_eq!(main_with_args(["nlevel", "verify", "/nonexistent/file.json"]), EXIT_FAILURE);
    }

    #[test]
    fn method_flag_overrides() {
        assert_eq!(method_override(Some("auto"), Some(Method::Reference)).unwrap(), None);
        assert_eq!(method_override(None, Some(Method::Reference)).unwrap(), Some(Method::Reference));
        assert_eq!(method_override(Some("jacobi"), None).unwrap(), Some(Method::JacobiEigen));
        assert!(method_override(Some("nope"), None).is_err());
    }
}
