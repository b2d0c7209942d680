//! Scenario files and CSV output.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "levels": [0.0, 10.0, 25.0],
//!   "couplings": [
//!     {"i": 0, "j": 1, "g": 1.0, "omega": 10.0},
//!     {"i": 0, "j": 2, "g": 0.5, "omega": 25.0},
//!     {"i": 1, "j": 2, "g": 2.0, "omega": 15.0, "phi": 0.0}
//!   ],
//!   "initial": 0,
//!   "t_end": 5.0,
//!   "samples": 1001,
//!   "method": "lagrange3",
//!   "outputs": ["populations", "amplitudes", "conditions"]
//! }
//! ```
//!
//! `g` is the coupling after the rotating-wave redefinition: the RWA matrix
//! element is `g e^{iωt}` and the lab-frame drive is `2g cos(ωt + φ)`.
//! `initial` is either a level index or a list of `[re, im]` amplitudes, which
//! are normalized on use. `samples` defaults to 1001, `method` to automatic
//! selection, and `outputs` to populations and amplitudes.

use std::io::{self, Write};
use std::path::Path;

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Drive, LevelSystem, StateVector};
use crate::oracle::TimeSeries;
use crate::propagator::Method;

pub const DEFAULT_SAMPLES: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    Populations,
    Amplitudes,
    Propagator,
    Conditions,
}

fn default_outputs() -> Vec<Output> {
    vec![Output::Populations, Output::Amplitudes]
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Basis(usize),
    Amplitudes(Vec<C64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum InitialRepr {
    Basis(usize),
    Amplitudes(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioRepr {
    levels: Vec<f64>,
    couplings: Vec<Drive>,
    initial: InitialRepr,
    t_end: f64,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    method: Option<String>,
    #[serde(default = "default_outputs")]
    outputs: Vec<Output>,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioRepr", into = "ScenarioRepr")]
pub struct Scenario {
    pub system: LevelSystem,
    pub initial: InitialState,
    pub t_end: f64,
    pub samples: usize,
    /// `None` selects the method automatically.
    pub method: Option<Method>,
    pub outputs: Vec<Output>,
}

impl TryFrom<ScenarioRepr> for Scenario {
    type Error = Error;

    fn try_from(r: ScenarioRepr) -> Result<Self> {
        let system = LevelSystem::new(r.levels, r.couplings)?;
        let initial = match r.initial {
            InitialRepr::Basis(k) => InitialState::Basis(k),
            InitialRepr::Amplitudes(a) => {
                InitialState::Amplitudes(a.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            }
        };
        let method = match r.method.as_deref() {
            None | Some("auto") => None,
            Some(name) => Some(name.parse::<Method>().map_err(Error::InvalidInput)?),
        };
        if !(r.t_end >= 0.0 && r.t_end.is_finite()) {
            return Err(Error::InvalidInput(format!("t_end must be finite and non-negative, got {}", r.t_end)));
        }
        if r.samples == 0 {
            return Err(Error::InvalidInput("samples must be at least 1".into()));
        }
        let scenario = Scenario { system, initial, t_end: r.t_end, samples: r.samples, method, outputs: r.outputs };
        scenario.initial_state()?;
        Ok(scenario)
    }
}

impl From<Scenario> for ScenarioRepr {
    fn from(s: Scenario) -> Self {
        let initial = match s.initial {
            InitialState::Basis(k) => InitialRepr::Basis(k),
            InitialState::Amplitudes(a) => InitialRepr::Amplitudes(a.iter().map(|z| [z.re, z.im]).collect()),
        };
        ScenarioRepr {
            levels: s.system.energies().to_vec(),
            couplings: s.system.drives().to_vec(),
            initial,
            t_end: s.t_end,
            samples: s.samples,
            method: s.method.map(|m| m.name().to_string()),
            outputs: s.outputs,
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// The initial state normalized to unit norm.
    pub fn initial_state(&self) -> Result<StateVector> {
        let n = self.system.n();
        match &self.initial {
            InitialState::Basis(k) => StateVector::basis(n, *k),
            InitialState::Amplitudes(a) => {
                if a.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, actual: a.len() });
                }
                StateVector::normalized(Array1::from(a.clone()))
            }
        }
    }

    /// Sample times `0, …, t_end`; a single row when `t_end = 0`.
    pub fn times(&self) -> Vec<f64> {
        if self.t_end == 0.0 {
            vec![0.0]
        } else {
            crate::oracle::sample_times(self.t_end, self.samples)
        }
    }

    pub fn wants(&self, output: Output) -> bool {
        self.outputs.contains(&output)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `t,pop_*,re_*,im_*` rows (columns per `outputs`) followed by
/// `# key: value` footer lines.
pub fn write_series_csv<W: Write>(
    mut w: W,
    series: &TimeSeries,
    populations: bool,
    amplitudes: bool,
    footer: &[String],
) -> io::Result<()> {
    let n = series.states.first().map_or(0, StateVector::dim);
    let mut header = vec!["t".to_string()];
    if populations {
        header.extend((0..n).map(|j| format!("pop_{j}")));
    }
    if amplitudes {
        for j in 0..n {
            header.push(format!("re_{j}"));
            header.push(format!("im_{j}"));
        }
    }
    writeln!(w, "{}", header.join(","))?;
    for (k, (t, s)) in series.times.iter().zip(&series.states).enumerate() {
        let mut row = vec![format_float(*t)];
        if populations {
            row.extend(series.populations.row(k).iter().map(|&p| format_float(p)));
        }
        if amplitudes {
            for z in s.amplitudes() {
                row.push(format_float(z.re));
                row.push(format_float(z.im));
            }
        }
        writeln!(w, "{}", row.join(","))?;
    }
    for line in footer {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

/// Writes to `path`, or to standard output when `path` is `None`.
pub fn write_output(path: Option<&Path>, contents: &[u8]) -> io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(contents)?;
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RABI: &str = r#"{
        "levels": [0.0, 5.0],
        "couplings": [{"i": 0, "j": 1, "g": 1.0, "omega": 5.0}],
        "initial": 0,
        "t_end": 1.0
    }"#;

    #[test]
    fn defaults_apply() {
        let s = Scenario::from_json(RABI).unwrap();
        assert_eq!(s.samples, DEFAULT_SAMPLES);
        assert_eq!(s.method, None);
        assert_eq!(s.outputs, default_outputs());
        assert_eq!(s.initial_state().unwrap(), StateVector::basis(2, 0).unwrap());
    }

    #[test]
    fn round_trips() {
        let text = r#"{
            "levels": [0.0, 1.5, 4.0],
            "couplings": [
                {"i": 1, "j": 2, "g": 0.3, "omega": 2.5},
                {"i": 0, "j": 1, "g": 0.1, "omega": 1.5, "phi": 0.25},
                {"i": 0, "j": 2, "g": 0.2, "omega": 4.0}
            ],
            "initial": [[0.6, 0.0], [0.0, 0.8], [0.0, 0.0]],
            "t_end": 2.0,
            "samples": 7,
            "method": "jacobi",
            "outputs": ["populations", "conditions"]
        }"#;
        let s = Scenario::from_json(text).unwrap();
        let again = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(s, again);
        assert_eq!(again.method, Some(Method::JacobiEigen));
    }

    #[test]
    fn auto_method_is_none() {
        let text = RABI.replace("\"t_end\"", "\"method\": \"auto\", \"t_end\"");
        assert_eq!(Scenario::from_json(&text).unwrap().method, None);
    }

    #[test]
    fn rejects_bad_scenarios() {
        assert!(Scenario::from_json(&RABI.replace("\"initial\": 0", "\"initial\": 2")).is_err());
        assert!(Scenario::from_json(&RABI.replace("\"initial\": 0", "\"initial\": [[0.0, 0.0], [0.0, 0.0]]")).is_err());
        assert!(Scenario::from_json(&RABI.replace("\"t_end\": 1.0", "\"t_end\": -1.0")).is_err());
        assert!(Scenario::from_json(&RABI.replace("5.0}", "5.0, \"extra\": 1}")).is_err());
        let err = Scenario::from_json("{\"levels\": [0.0,").unwrap_err();
        assert!(err.line() > 0);
    }

    #[test]
    fn csv_layout() {
        let times = vec![0.0, 0.5];
        let states = vec![StateVector::basis(2, 0).unwrap(), StateVector::basis(2, 1).unwrap()];
        let series = TimeSeries::new(times, states);
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &series, true, true, &["note: 1".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,pop_0,pop_1,re_0,im_0,re_1,im_1");
        assert!(lines[2].starts_with("5.0000000000000000e-1,0.0000000000000000e0,1.0000000000000000e0"));
        assert_eq!(lines[3], "# note: 1");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }
}
