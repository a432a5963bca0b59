//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::fs;
use std::path::{Path, PathBuf};

use qcoherence::{Boundary, ModelSpec, OptimOptions, Outputs, QuantumState};

use crate::CliError;

pub type RawConfig = BTreeMap<String, String>;

const KNOWN_KEYS: &[&str] = &[
    "scenario", "param", "start", "stop", "points", "endpoint", "lambda", "epsilon", "mu", "phi",
    "theta", "j", "delta", "n", "boundary", "files", "seed", "restarts", "tol", "max_iter",
    "ansatz_k", "threads", "outputs", "out", "allow_slow",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_text(text: &str) -> Result<RawConfig, CliError> {
    let mut map = RawConfig::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = parse_pair(line)
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
        map.insert(k, v);
    }
    Ok(map)
}

pub fn read_file(path: &Path) -> Result<RawConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_text(&text)
}

pub fn parse_pair(s: &str) -> Option<(String, String)> {
    let (k, v) = s.split_once('=')?;
    let k = k.trim();
    if k.is_empty() {
        return None;
    }
    Some((k.to_ascii_lowercase(), v.trim().to_string()))
}

/// A real number, optionally a multiple or fraction of `pi` (`pi/4`, `2pi`, `-3*pi/2`).
pub fn parse_real(s: &str) -> Option<f64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
    let Some(at) = s.find("pi") else {
        return s.parse::<f64>().ok().filter(|x| x.is_finite());
    };
    let coef = match s[..at].trim_end_matches('*') {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    let rest = &s[at + 2..];
    let div = if rest.is_empty() {
        1.0
    } else {
        rest.strip_prefix('/')?.parse::<f64>().ok()?
    };
    let v = coef * PI / div;
    v.is_finite().then_some(v)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Some(true),
        "0" | "false" | "no" => Some(false),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Ising2,
    WernerGhz,
    WState,
    Xxz,
    File,
}

impl Scenario {
    fn parse(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "ising2" => Self::Ising2,
            "werner-ghz" => Self::WernerGhz,
            "w-state" => Self::WState,
            "xxz" => Self::Xxz,
            "file" => Self::File,
            other => return Err(CliError::Usage(format!("unknown scenario '{other}'"))),
        })
    }

    /// Real parameters with their defaults.
    fn parameters(self) -> &'static [(&'static str, f64)] {
        match self {
            Self::Ising2 => &[("lambda", 1.0), ("j", 0.0), ("epsilon", 0.2)],
            Self::WernerGhz => &[("mu", 1.0), ("phi", FRAC_PI_4)],
            Self::WState => &[("theta", FRAC_PI_4), ("phi", 0.0)],
            Self::Xxz => &[("n", 10.0), ("j", 1.0), ("delta", 1.0)],
            Self::File => &[],
        }
    }

    /// Default sweep: parameter, start, stop, points, endpoint included.
    fn default_grid(self) -> (&'static str, f64, f64, usize, bool) {
        match self {
            Self::Ising2 => ("j", 0.0, 3.0, 31, true),
            Self::WernerGhz => ("mu", 0.0, 1.0, 21, true),
            Self::WState => ("phi", 0.0, 2.0 * PI, 64, false),
            Self::Xxz => ("delta", -2.0, 6.0, 33, true),
            Self::File => ("file", 0.0, 0.0, 0, true),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Grid {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub scenario: Scenario,
    pub grid: Grid,
    pub fixed: BTreeMap<String, f64>,
    pub boundary: Boundary,
    pub files: Vec<PathBuf>,
    pub optim: OptimOptions,
    pub outputs: Outputs,
    pub threads: Option<usize>,
    pub output_path: Option<PathBuf>,
}

fn real(raw: &RawConfig, key: &str) -> Result<Option<f64>, CliError> {
    raw.get(key)
        .map(|v| parse_real(v).ok_or_else(|| CliError::Usage(format!("{key}: '{v}' is not a number"))))
        .transpose()
}

fn integer(raw: &RawConfig, key: &str) -> Result<Option<usize>, CliError> {
    raw.get(key)
        .map(|v| {
            v.parse::<usize>()
                .map_err(|_| CliError::Usage(format!("{key}: '{v}' is not a nonnegative integer")))
        })
        .transpose()
}

fn flag(raw: &RawConfig, key: &str) -> Result<bool, CliError> {
    match raw.get(key) {
        None => Ok(false),
        Some(v) => parse_bool(v).ok_or_else(|| CliError::Usage(format!("{key}: '{v}' is not a boolean"))),
    }
}

/// Optimizer settings shared by `sweep` and `analyze`.
pub fn optim_options(raw: &RawConfig) -> Result<OptimOptions, CliError> {
    let mut opts = OptimOptions::default();
    if let Some(seed) = raw.get("seed") {
        opts.seed = seed
            .parse()
            .map_err(|_| CliError::Usage(format!("seed: '{seed}' is not a u64")))?;
    }
    opts.restarts = integer(raw, "restarts")?;
    if let Some(tol) = real(raw, "tol")? {
        opts.objective_tolerance = tol;
    }
    if let Some(it) = integer(raw, "max_iter")? {
        opts.max_iterations = it;
    }
    opts.ansatz_components = integer(raw, "ansatz_k")?;
    opts.validate().map_err(CliError::Core)?;
    Ok(opts)
}

impl SweepConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        if let Some(k) = raw.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(CliError::Usage(format!("unknown config key '{k}'")));
        }
        let scenario = Scenario::parse(
            raw.get("scenario")
                .ok_or_else(|| CliError::Usage("missing 'scenario'".into()))?,
        )?;
        let params = scenario.parameters();
        let allowed = |k: &str| params.iter().any(|(p, _)| *p == k);
        for key in ["lambda", "epsilon", "mu", "phi", "theta", "j", "delta", "n"] {
            if raw.contains_key(key) && !allowed(key) {
                return Err(CliError::Usage(format!("'{key}' does not apply to this scenario")));
            }
        }
        if raw.contains_key("boundary") && scenario != Scenario::Xxz {
            return Err(CliError::Usage("'boundary' applies to xxz only".into()));
        }
        if raw.contains_key("files") != (scenario == Scenario::File) {
            return Err(CliError::Usage("'files' is required for, and only for, scenario=file".into()));
        }

        let mut fixed = BTreeMap::new();
        for &(p, default) in params {
            fixed.insert(p.to_string(), real(raw, p)?.unwrap_or(default));
        }
        let boundary = match raw.get("boundary") {
            Some(b) => b.parse().map_err(CliError::Core)?,
            None => Boundary::Periodic,
        };

        let files: Vec<PathBuf> = raw
            .get("files")
            .map(|f| f.split(',').map(str::trim).filter(|s| !s.is_empty()).map(PathBuf::from).collect())
            .unwrap_or_default();

        let grid = if scenario == Scenario::File {
            for key in ["param", "start", "stop", "points", "endpoint"] {
                if raw.contains_key(key) {
                    return Err(CliError::Usage(format!("'{key}' does not apply to scenario=file")));
                }
            }
            if files.is_empty() {
                return Err(CliError::Usage("'files' lists no paths".into()));
            }
            Grid {
                param: "file".into(),
                values: (0..files.len()).map(|i| i as f64).collect(),
            }
        } else {
            let (dp, dstart, dstop, dpoints, dend) = scenario.default_grid();
            let param = raw.get("param").map(String::as_str).unwrap_or(dp).to_string();
            if !allowed(&param) || param == "n" {
                return Err(CliError::Usage(format!("cannot sweep '{param}' in this scenario")));
            }
            let (start, stop) = if param == dp {
                (real(raw, "start")?.unwrap_or(dstart), real(raw, "stop")?.unwrap_or(dstop))
            } else {
                (
                    real(raw, "start")?.ok_or_else(|| CliError::Usage("missing 'start'".into()))?,
                    real(raw, "stop")?.ok_or_else(|| CliError::Usage("missing 'stop'".into()))?,
                )
            };
            let points = integer(raw, "points")?.unwrap_or(dpoints);
            let endpoint = match raw.get("endpoint") {
                Some(_) => flag(raw, "endpoint")?,
                None => param != dp || dend,
            };
            if points < 2 {
                return Err(CliError::Usage("a grid needs at least 2 points".into()));
            }
            let steps = if endpoint { points - 1 } else { points } as f64;
            let values = (0..points)
                .map(|k| start + (stop - start) * k as f64 / steps)
                .collect();
            Grid { param, values }
        };

        if scenario == Scenario::WernerGhz {
            let mut mus = vec![fixed["mu"]];
            if grid.param == "mu" {
                mus.extend(&grid.values);
            }
            if mus.iter().any(|m| !(0.0..=1.0).contains(m)) {
                return Err(CliError::Usage("mu must lie in [0, 1]".into()));
            }
        }
        let n_sites = if scenario == Scenario::Xxz {
            let n = fixed["n"];
            if n.fract() != 0.0 || !(2.0..=14.0).contains(&n) {
                return Err(CliError::Usage("n must be an integer in [2, 14]".into()));
            }
            n as usize
        } else {
            3
        };

        let outputs = match raw.get("outputs") {
            Some(list) => Outputs::parse(list).map_err(CliError::Core)?,
            None if scenario == Scenario::Xxz => Outputs::monogamy_only(),
            None => Outputs::all(),
        };
        if outputs == Outputs::default() {
            return Err(CliError::Usage("no outputs requested".into()));
        }
        let slow = outputs.total || outputs.local || outputs.intrinsic || outputs.full_split;
        if scenario == Scenario::Xxz && n_sites >= 8 && slow && !flag(raw, "allow_slow")? {
            return Err(CliError::Usage(
                "c_total, c_local, c_intrinsic and full_split at n >= 8 are slow; pass --allow-slow".into(),
            ));
        }

        let threads = integer(raw, "threads")?;
        if threads == Some(0) {
            return Err(CliError::Usage("threads must be positive".into()));
        }

        Ok(Self {
            scenario,
            grid,
            fixed,
            boundary,
            files,
            optim: optim_options(raw)?,
            outputs,
            threads,
            output_path: raw.get("out").map(PathBuf::from),
        })
    }

    /// The state at grid point `index`.
    pub fn state_at(&self, index: usize) -> Result<QuantumState, CliError> {
        let mut p = self.fixed.clone();
        p.insert(self.grid.param.clone(), self.grid.values[index]);
        let state = match self.scenario {
            Scenario::Ising2 => {
                qcoherence::ground_state(&ModelSpec::Ising2 {
                    lambda: p["lambda"],
                    j: p["j"],
                    epsilon: p["epsilon"],
                })?
                .state
            }
            Scenario::WernerGhz => qcoherence::werner_ghz(p["mu"], p["phi"])?,
            Scenario::WState => qcoherence::w_state(p["theta"], p["phi"]),
            Scenario::Xxz => {
                qcoherence::ground_state(&ModelSpec::Xxz {
                    n_sites: p["n"] as usize,
                    j: p["j"],
                    delta: p["delta"],
                    boundary: self.boundary,
                })?
                .state
            }
            Scenario::File => qcoherence::io::read_state(&self.files[index])?,
        };
        Ok(state)
    }
}
