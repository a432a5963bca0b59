use rayon::prelude::*;

use qcoherence::coherence::format_sig;
use qcoherence::{decomposition_report, BasisSpec, CoherenceReport};

use crate::config::SweepConfig;
use crate::CliError;

const DIGITS: usize = 9;

/// Evaluates every grid point and renders the CSV, rows in grid order.
pub fn run_sweep(config: &SweepConfig) -> Result<String, CliError> {
    let run = || -> Result<Vec<CoherenceReport>, CliError> {
        (0..config.grid.values.len())
            .into_par_iter()
            .map(|i| {
                let state = config.state_at(i)?;
                let basis = BasisSpec::computational(state.dims());
                let mut opts = config.optim.clone();
                opts.seed ^= i as u64;
                log::info!("{} = {}", config.grid.param, config.grid.values[i]);
                Ok(decomposition_report(&state, &basis, &config.outputs, &opts)?)
            })
            .collect()
    };
    let reports = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    render_csv(&config.grid.values, &reports)
}

pub fn render_csv(params: &[f64], reports: &[CoherenceReport]) -> Result<String, CliError> {
    let header: Vec<String> = reports
        .first()
        .map(|r| r.entries().into_iter().map(|(k, _)| k).collect())
        .unwrap_or_default();
    let mut csv = format!("param,{},converged\n", header.join(","));
    for (p, r) in params.iter().zip(reports) {
        let entries = r.entries();
        if entries.len() != header.len() || entries.iter().zip(&header).any(|((k, _), h)| k != h) {
            // files of different sizes produce different columns
            return Err(CliError::Usage("grid points yield different column sets".into()));
        }
        csv.push_str(&format_sig(*p, DIGITS));
        for (_, v) in &entries {
            csv.push(',');
            csv.push_str(&format_sig(*v, DIGITS));
        }
        csv.push_str(if r.converged { ",1\n" } else { ",0\n" });
    }
    Ok(csv)
}
