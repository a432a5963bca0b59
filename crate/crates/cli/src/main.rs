//! `qcoherence`: coherence sweeps, file analysis, self tests and state export.

mod config;
mod selftest;
mod sweep;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qcoherence::{decomposition_report, BasisSpec, BellSign, Boundary, ModelSpec, Outputs, QuantumState};

use config::{RawConfig, SweepConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] qcoherence::Error),
}

#[derive(Parser)]
#[command(name = "qcoherence", version, about = "Multipartite coherence under the square-root QJSD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one parameter of a scenario and write a CSV.
    Sweep {
        /// Flat key = value config file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        optim: OptimArgs,
        #[arg(long)]
        threads: Option<usize>,
        /// Skip the guard on slow outputs for long XXZ chains.
        #[arg(long)]
        allow_slow: bool,
        /// Config overrides, `key=value`.
        overrides: Vec<String>,
    },
    /// Full coherence report of a state file.
    Analyze {
        path: PathBuf,
        #[command(flatten)]
        optim: OptimArgs,
    },
    /// Run the oracle and property suites.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Logarithm base of the metric suites; anything but 2 should fail.
        #[arg(long, default_value = "2")]
        entropy_base: String,
    },
    /// Write a named state to a JSON file.
    State {
        /// bell, ghz, werner-ghz, w, minus-product, ising2 or xxz.
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Parameters, `key=value`.
        params: Vec<String>,
    },
}

#[derive(Args)]
struct OptimArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    ansatz_k: Option<usize>,
    /// Comma-separated output names.
    #[arg(long)]
    outputs: Option<String>,
}

impl OptimArgs {
    fn apply(&self, raw: &mut RawConfig) {
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                raw.insert(k.into(), v);
            }
        };
        set("out", self.out.as_ref().map(|p| p.display().to_string()));
        set("seed", self.seed.map(|x| x.to_string()));
        set("restarts", self.restarts.map(|x| x.to_string()));
        set("tol", self.tol.map(|x| x.to_string()));
        set("max_iter", self.max_iter.map(|x| x.to_string()));
        set("ansatz_k", self.ansatz_k.map(|x| x.to_string()));
        set("outputs", self.outputs.clone());
    }
}

fn parse_overrides(items: &[String]) -> Result<RawConfig, CliError> {
    items
        .iter()
        .map(|s| config::parse_pair(s).ok_or_else(|| CliError::Usage(format!("expected key=value, got '{s}'"))))
        .collect()
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sweep(config: Option<PathBuf>, optim: OptimArgs, threads: Option<usize>, allow_slow: bool, overrides: Vec<String>) -> Result<(), CliError> {
    let mut raw = match &config {
        Some(path) => config::read_file(path)?,
        None => RawConfig::new(),
    };
    raw.extend(parse_overrides(&overrides)?);
    optim.apply(&mut raw);
    if let Some(t) = threads {
        raw.insert("threads".into(), t.to_string());
    }
    if allow_slow {
        raw.insert("allow_slow".into(), "true".into());
    }
    let cfg = SweepConfig::from_raw(&raw)?;
    let csv = sweep::run_sweep(&cfg)?;
    emit(cfg.output_path.as_deref(), &csv)
}

fn analyze(path: &Path, optim: OptimArgs) -> Result<(), CliError> {
    let mut raw = RawConfig::new();
    optim.apply(&mut raw);
    let opts = config::optim_options(&raw)?;
    let outputs = match raw.get("outputs") {
        Some(list) => Outputs::parse(list)?,
        None => Outputs::all(),
    };
    let state = qcoherence::io::read_state(path)?;
    let basis = BasisSpec::computational(state.dims());
    let report = decomposition_report(&state, &basis, &outputs, &opts)?;
    emit(raw.get("out").map(Path::new), &report.to_key_value())
}

fn named_state(name: &str, params: &RawConfig) -> Result<QuantumState, CliError> {
    let allowed: &[&str] = match name {
        "bell" => &["sign"],
        "ghz" => &["phi"],
        "werner-ghz" => &["mu", "phi"],
        "w" => &["theta", "phi"],
        "minus-product" => &["n"],
        "ising2" => &["lambda", "j", "epsilon"],
        "xxz" => &["n", "j", "delta", "boundary"],
        other => return Err(CliError::Usage(format!("unknown state '{other}'"))),
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(CliError::Usage(format!("'{k}' does not apply to state '{name}'")));
    }
    let real = |k: &str, default: f64| -> Result<f64, CliError> {
        params.get(k).map_or(Ok(default), |v| {
            config::parse_real(v).ok_or_else(|| CliError::Usage(format!("{k}: '{v}' is not a number")))
        })
    };
    let count = |k: &str, default: usize| -> Result<usize, CliError> {
        params.get(k).map_or(Ok(default), |v| {
            v.parse().map_err(|_| CliError::Usage(format!("{k}: '{v}' is not a nonnegative integer")))
        })
    };
    let quarter = std::f64::consts::FRAC_PI_4;
    Ok(match name {
        "bell" => {
            let sign = params.get("sign").map_or(Ok(-1), |s| {
                s.parse::<i32>().map_err(|_| CliError::Usage(format!("sign: '{s}' is not +1 or -1")))
            })?;
            qcoherence::bell_state(BellSign::try_from(sign)?)
        }
        "ghz" => qcoherence::ghz_state(real("phi", quarter)?),
        "werner-ghz" => qcoherence::werner_ghz(real("mu", 1.0)?, real("phi", quarter)?)?,
        "w" => qcoherence::w_state(real("theta", quarter)?, real("phi", 0.0)?),
        "minus-product" => qcoherence::product_minus_state(count("n", 2)?)?,
        "ising2" => {
            qcoherence::ground_state(&ModelSpec::Ising2 {
                lambda: real("lambda", 1.0)?,
                j: real("j", 0.0)?,
                epsilon: real("epsilon", 0.2)?,
            })?
            .state
        }
        _ => {
            let boundary: Boundary = params.get("boundary").map_or("periodic", String::as_str).parse()?;
            qcoherence::ground_state(&ModelSpec::Xxz {
                n_sites: count("n", 10)?,
                j: real("j", 1.0)?,
                delta: real("delta", 1.0)?,
                boundary,
            })?
            .state
        }
    })
}

fn state(name: &str, out: Option<PathBuf>, params: Vec<String>) -> Result<(), CliError> {
    let s = named_state(name, &parse_overrides(&params)?)?;
    emit(out.as_deref(), &qcoherence::io::to_string(&s))
}

fn run_selftest(seed: u64, base: &str) -> Result<bool, CliError> {
    let base = match base {
        "e" => std::f64::consts::E,
        other => other
            .parse::<f64>()
            .ok()
            .filter(|b| *b > 0.0 && *b != 1.0)
            .ok_or_else(|| CliError::Usage(format!("invalid entropy base '{other}'")))?,
    };
    let mut all = true;
    for suite in selftest::run(seed, base) {
        let status = if suite.passed() { "PASS" } else { "FAIL" };
        println!(
            "{status} {}: {} checks, max deviation {:.3e}",
            suite.name, suite.checks, suite.max_deviation
        );
        all &= suite.passed();
    }
    println!("selftest {}", if all { "passed" } else { "failed" });
    Ok(all)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Sweep { config, optim, threads, allow_slow, overrides } => {
            sweep(config, optim, threads, allow_slow, overrides).map(|_| true)
        }
        Command::Analyze { path, optim } => analyze(&path, optim).map(|_| true),
        Command::Selftest { seed, entropy_base } => run_selftest(seed, &entropy_base),
        Command::State { name, out, params } => state(&name, out, params).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
