//! The coherence decomposition: total, intrinsic, local, per-site, pairwise
//! and bipartition coherences, the monogamy score, and inequality slacks.
//!
//! Every quantity is a distance `√J`. Sites are 0-based in the API; the
//! rendered keys (`c_site_1`, `c_pair_1_2`, …) are 1-based.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{invalid_arg, Result};
use crate::factory::BasisSpec;
use crate::metric::qjsd_distance;
use crate::minimize::{closest_incoherent, closest_separable, MinimizationResult, OptimOptions};
use crate::state::QuantumState;

/// `C(ρ) = min_{σ incoherent} √J(ρ, σ)` with the minimizer `ρ_d`.
pub fn total_coherence(
    rho: &QuantumState,
    basis: &BasisSpec,
    opts: &OptimOptions,
) -> Result<(f64, MinimizationResult)> {
    let res = closest_incoherent(rho, basis, opts)?;
    Ok((res.distance(), res))
}

/// Distance to the closest state separable across `partition`, with the minimizer.
pub fn intrinsic_coherence(
    rho: &QuantumState,
    partition: &[Vec<usize>],
    opts: &OptimOptions,
) -> Result<(f64, MinimizationResult)> {
    let res = closest_separable(rho, partition, opts)?;
    Ok((res.distance(), res))
}

fn full_split(n_sites: usize) -> Vec<Vec<usize>> {
    (0..n_sites).map(|s| vec![s]).collect()
}

/// `D(σ_S, ρ_d)` for the fully separable and incoherent minimizers of `ρ`.
pub fn local_coherence(rho: &QuantumState, basis: &BasisSpec, opts: &OptimOptions) -> Result<f64> {
    let (_, incoherent) = total_coherence(rho, basis, opts)?;
    let (_, separable) = intrinsic_coherence(rho, &full_split(rho.num_sites()), opts)?;
    qjsd_distance(&separable.minimizer, &incoherent.minimizer)
}

/// Total coherence of the reduced state of site `n`.
pub fn site_coherence(
    rho: &QuantumState,
    n: usize,
    basis: &BasisSpec,
    opts: &OptimOptions,
) -> Result<f64> {
    let reduced = rho.partial_trace(&[n])?;
    Ok(total_coherence(&reduced, &basis.restrict(&[n])?, opts)?.0)
}

/// Intrinsic coherence between sites `m` and `n` of the two-site reduction.
pub fn pairwise_intrinsic(rho: &QuantumState, m: usize, n: usize, opts: &OptimOptions) -> Result<f64> {
    if m == n {
        return Err(invalid_arg("pairwise coherence needs two distinct sites"));
    }
    let reduced = rho.partial_trace(&[m.min(n), m.max(n)])?;
    Ok(intrinsic_coherence(&reduced, &[vec![0], vec![1]], opts)?.0)
}

/// `M = Σ_{n≥1} C_{0:n} - C_{0:rest}`; negative means monogamous.
pub fn monogamy(rho: &QuantumState, opts: &OptimOptions) -> Result<f64> {
    let n_sites = rho.num_sites();
    if n_sites < 2 {
        return Err(invalid_arg("monogamy needs at least two sites"));
    }
    let pairs = (1..n_sites)
        .map(|n| pairwise_intrinsic(rho, 0, n, opts))
        .sum::<Result<f64>>()?;
    let rest: Vec<usize> = (1..n_sites).collect();
    let (first, _) = intrinsic_coherence(rho, &[vec![0], rest], opts)?;
    Ok(pairs - first)
}

/// Which pairs or bipartitions a report evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Selection {
    #[default]
    None,
    /// Only those involving site 0.
    First,
    All,
}

/// Quantities a [`decomposition_report`] computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Outputs {
    pub total: bool,
    pub local: bool,
    pub intrinsic: bool,
    pub per_site: bool,
    pub pairwise: Selection,
    pub bipartitions: Selection,
    pub full_split: bool,
    pub monogamy: bool,
}

impl Outputs {
    pub fn all() -> Self {
        Self {
            total: true,
            local: true,
            intrinsic: true,
            per_site: true,
            pairwise: Selection::All,
            bipartitions: Selection::All,
            full_split: true,
            monogamy: true,
        }
    }

    /// Pairwise `0:n`, bipartition `0:rest` and `M`.
    pub fn monogamy_only() -> Self {
        Self {
            pairwise: Selection::First,
            bipartitions: Selection::First,
            monogamy: true,
            ..Self::default()
        }
    }

    /// Parses a comma-separated list of output names.
    pub fn parse(list: &str) -> Result<Self> {
        let mut out = Self::default();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name {
                "all" => out = Self::all(),
                "c_total" => out.total = true,
                "c_local" => out.local = true,
                "c_intrinsic" => out.intrinsic = true,
                "per_site" => out.per_site = true,
                "pairwise" => out.pairwise = Selection::All,
                "pairwise_first" => out.pairwise = out.pairwise.max_with(Selection::First),
                "bipartitions" => out.bipartitions = Selection::All,
                "bipart_first" => out.bipartitions = out.bipartitions.max_with(Selection::First),
                "full_split" => out.full_split = true,
                "monogamy" => out.monogamy = true,
                other => return Err(invalid_arg(format!("unknown output '{other}'"))),
            }
        }
        Ok(out)
    }

    fn needs_total(&self) -> bool {
        self.total || self.local
    }

    fn needs_full_split(&self) -> bool {
        self.intrinsic || self.local || self.full_split
    }

    fn pairs(&self, n_sites: usize) -> Vec<(usize, usize)> {
        let sel = if self.monogamy {
            self.pairwise.max_with(Selection::First)
        } else {
            self.pairwise
        };
        let firsts = match sel {
            Selection::None => 0,
            Selection::First => 1,
            Selection::All => n_sites,
        };
        (0..firsts)
            .flat_map(|m| (m + 1..n_sites).map(move |n| (m, n)))
            .collect()
    }

    fn bipartition_sites(&self, n_sites: usize) -> Vec<usize> {
        let sel = if self.monogamy {
            self.bipartitions.max_with(Selection::First)
        } else {
            self.bipartitions
        };
        match sel {
            Selection::None => vec![],
            Selection::First => vec![0],
            Selection::All => (0..n_sites).collect(),
        }
    }
}

impl Selection {
    fn max_with(self, other: Selection) -> Selection {
        let rank = |s: Selection| match s {
            Selection::None => 0,
            Selection::First => 1,
            Selection::All => 2,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

/// All coherence quantities of one state. Unrequested entries are `None` or absent.
#[derive(Clone, Debug, Default)]
pub struct CoherenceReport {
    pub n_sites: usize,
    pub c_total: Option<f64>,
    pub c_intrinsic: Option<f64>,
    pub c_local: Option<f64>,
    pub per_site: Option<Vec<f64>>,
    /// `(m, n) → C_{m:n}` with `m < n`.
    pub pairwise: BTreeMap<(usize, usize), f64>,
    /// `l → C_{l:rest}`.
    pub bipartitions: BTreeMap<usize, f64>,
    pub full_split: Option<f64>,
    pub monogamy: Option<f64>,
    /// `C_L + C_I - C`.
    pub triangle_slack: Option<f64>,
    /// `Σ_n C_n + C_I - C`.
    pub subadditivity_slack: Option<f64>,
    /// For three sites: `C_{1:2} + C_{0:12}`, `C_{0:1} + C_{2:01}`, `C_{0:2} + C_{1:02}`.
    pub tri_consistency: Option<[f64; 3]>,
    pub converged: bool,
    /// `ρ_d`, kept when the total coherence was computed.
    pub incoherent_minimizer: Option<QuantumState>,
    /// `σ_S` across the full split, kept when it was computed.
    pub separable_minimizer: Option<QuantumState>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Task {
    Incoherent(Vec<usize>),
    /// Kept sites and the partition of them, in global site labels.
    Separable(Vec<usize>, Vec<Vec<usize>>),
}

fn run_task(
    rho: &QuantumState,
    basis: &BasisSpec,
    opts: &OptimOptions,
    task: &Task,
) -> Result<MinimizationResult> {
    match task {
        Task::Incoherent(sites) => {
            let reduced = rho.partial_trace(sites)?;
            closest_incoherent(&reduced, &basis.restrict(sites)?, opts)
        }
        Task::Separable(sites, groups) => {
            let reduced = rho.partial_trace(sites)?;
            let local: Vec<Vec<usize>> = groups
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|s| sites.binary_search(s).expect("group site is kept"))
                        .collect()
                })
                .collect();
            closest_separable(&reduced, &local, opts)
        }
    }
}

/// Evaluates the requested quantities. Independent minimizations run in
/// parallel; identical sub-problems (e.g. the two-site full split and the
/// `0:rest` bipartition) are solved once.
pub fn decomposition_report(
    rho: &QuantumState,
    basis: &BasisSpec,
    outputs: &Outputs,
    opts: &OptimOptions,
) -> Result<CoherenceReport> {
    opts.validate()?;
    basis.check_dims(rho.dims())?;
    let n = rho.num_sites();
    let all: Vec<usize> = (0..n).collect();
    let split = full_split(n);

    let bipartition = |l: usize| -> Task {
        let rest: Vec<usize> = all.iter().copied().filter(|&s| s != l).collect();
        let mut groups = vec![vec![l], rest];
        groups.sort();
        Task::Separable(all.clone(), groups)
    };
    let pair = |m: usize, k: usize| Task::Separable(vec![m, k], vec![vec![m], vec![k]]);

    let pairs = if n >= 2 { outputs.pairs(n) } else { vec![] };
    let bipart_sites = if n >= 2 {
        outputs.bipartition_sites(n)
    } else {
        vec![]
    };

    let mut tasks: Vec<Task> = Vec::new();
    if outputs.needs_total() {
        tasks.push(Task::Incoherent(all.clone()));
    }
    if outputs.needs_full_split() {
        tasks.push(Task::Separable(all.clone(), split.clone()));
    }
    if outputs.per_site {
        tasks.extend((0..n).map(|s| Task::Incoherent(vec![s])));
    }
    tasks.extend(pairs.iter().map(|&(m, k)| pair(m, k)));
    tasks.extend(bipart_sites.iter().map(|&l| bipartition(l)));
    let slack_sites = outputs.needs_total() && outputs.needs_full_split() && outputs.per_site;
    tasks.sort();
    tasks.dedup();

    let results: Vec<MinimizationResult> = tasks
        .par_iter()
        .map(|t| run_task(rho, basis, opts, t))
        .collect::<Result<_>>()?;
    let solved: BTreeMap<Task, MinimizationResult> = tasks.into_iter().zip(results).collect();
    let value = |t: &Task| solved[t].distance();

    let mut report = CoherenceReport {
        n_sites: n,
        converged: solved.values().all(|r| r.converged),
        ..Default::default()
    };
    let total_task = Task::Incoherent(all.clone());
    let split_task = Task::Separable(all.clone(), split);
    if outputs.needs_total() {
        report.incoherent_minimizer = Some(solved[&total_task].minimizer.clone());
        if outputs.total {
            report.c_total = Some(value(&total_task));
        }
    }
    if outputs.needs_full_split() {
        report.separable_minimizer = Some(solved[&split_task].minimizer.clone());
        if outputs.intrinsic {
            report.c_intrinsic = Some(value(&split_task));
        }
        if outputs.full_split {
            report.full_split = Some(value(&split_task));
        }
    }
    if outputs.local {
        report.c_local = Some(qjsd_distance(
            &solved[&split_task].minimizer,
            &solved[&total_task].minimizer,
        )?);
    }
    if outputs.per_site {
        report.per_site = Some((0..n).map(|s| value(&Task::Incoherent(vec![s]))).collect());
    }
    for &(m, k) in &pairs {
        report.pairwise.insert((m, k), value(&pair(m, k)));
    }
    for &l in &bipart_sites {
        report.bipartitions.insert(l, value(&bipartition(l)));
    }
    if outputs.monogamy && n >= 2 {
        let sum: f64 = (1..n).map(|k| report.pairwise[&(0, k)]).sum();
        report.monogamy = Some(sum - report.bipartitions[&0]);
    }

    if outputs.local && outputs.total && outputs.intrinsic {
        let c = value(&total_task);
        let c_i = value(&split_task);
        let c_l = report.c_local.expect("local computed");
        report.triangle_slack = Some(c_l + c_i - c);
        if slack_sites {
            let sites: f64 = report.per_site.as_ref().expect("per-site computed").iter().sum();
            report.subadditivity_slack = Some(sites + c_i - c);
        }
    }
    if n == 3 && report.pairwise.len() == 3 && report.bipartitions.len() == 3 {
        let p = &report.pairwise;
        let b = &report.bipartitions;
        report.tri_consistency = Some([
            p[&(1, 2)] + b[&0],
            p[&(0, 1)] + b[&2],
            p[&(0, 2)] + b[&1],
        ]);
    }
    Ok(report)
}

impl CoherenceReport {
    /// `(key, value)` pairs in the fixed column order.
    pub fn entries(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        let mut push = |k: String, v: Option<f64>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        push("c_total".into(), self.c_total);
        push("c_local".into(), self.c_local);
        push("c_intrinsic".into(), self.c_intrinsic);
        if let Some(sites) = &self.per_site {
            for (s, &v) in sites.iter().enumerate() {
                push(format!("c_site_{}", s + 1), Some(v));
            }
        }
        for (&(m, n), &v) in &self.pairwise {
            push(format!("c_pair_{}_{}", m + 1, n + 1), Some(v));
        }
        for (&l, &v) in &self.bipartitions {
            push(format!("c_bipart_{}_rest", l + 1), Some(v));
        }
        push("c_full_split".into(), self.full_split);
        push("monogamy".into(), self.monogamy);
        push("slack_eq6".into(), self.triangle_slack);
        push("slack_eq7".into(), self.subadditivity_slack);
        out
    }

    /// One `key = value` line per entry, then the diagnostics.
    pub fn to_key_value(&self) -> String {
        let mut text = String::new();
        let _ = writeln!(text, "n_sites = {}", self.n_sites);
        for (k, v) in self.entries() {
            let _ = writeln!(text, "{k} = {}", format_sig(v, 9));
        }
        if let Some(t) = self.tri_consistency {
            let labels = ["tri_2_3_plus_1_23", "tri_1_2_plus_12_3", "tri_1_3_plus_13_2"];
            for (label, v) in labels.iter().zip(t) {
                let _ = writeln!(text, "{label} = {}", format_sig(v, 9));
            }
        }
        let _ = writeln!(text, "converged = {}", u8::from(self.converged));
        text
    }
}

/// `value` with `digits` significant digits in plain or exponent notation.
pub fn format_sig(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".into();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let exponent = value.abs().log10().floor() as i32;
    if (-5..digits as i32).contains(&exponent) {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        let s = format!("{value:.decimals$}");
        // rounding can carry into a new digit; that only adds a trailing zero
        if s.contains('.') {
            let trimmed = s.trim_end_matches('0').trim_end_matches('.');
            return if trimmed == "-0" { "0".into() } else { trimmed.into() };
        }
        s
    } else {
        format!("{:.*e}", digits - 1, value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::{bell_state, ghz_state, product_minus_state, w_state, werner_ghz, BellSign};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    const BELL: f64 = 0.557_923_045_284_143_8;

    fn computational(n: usize) -> BasisSpec {
        BasisSpec::computational(&vec![2; n])
    }

    #[test]
    fn total_coherence_oracles() {
        let opts = OptimOptions::default();
        let plus = product_minus_state(1).unwrap();
        let (c, res) = total_coherence(&plus, &computational(1), &opts).unwrap();
        assert!((c - BELL).abs() < 1e-6);
        assert!(res.minimizer.max_abs_diff(&QuantumState::maximally_mixed(vec![2])) < 1e-6);

        let bell = bell_state(BellSign::Minus);
        let (c, res) = total_coherence(&bell, &computational(2), &opts).unwrap();
        assert!((c - BELL).abs() < 2e-3);
        let dephased = QuantumState::diagonal(vec![2, 2], &[0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(res.minimizer.max_abs_diff(&dephased) < 1e-3);

        let diag = QuantumState::diagonal(vec![2, 2], &[0.4, 0.3, 0.2, 0.1]).unwrap();
        let (c, res) = total_coherence(&diag, &computational(2), &opts).unwrap();
        assert_eq!(c, 0.0);
        assert!(res.minimizer.max_abs_diff(&diag) < 1e-15);
    }

    #[test]
    fn intrinsic_coherence_oracles() {
        let opts = OptimOptions::default();
        let (c, _) =
            intrinsic_coherence(&bell_state(BellSign::Minus), &[vec![0], vec![1]], &opts).unwrap();
        assert!((c - BELL).abs() < 2e-3);
        let product = product_minus_state(2).unwrap();
        let (c, res) = intrinsic_coherence(&product, &[vec![0], vec![1]], &opts).unwrap();
        assert!(c < 1e-6);
        assert!(res.minimizer.max_abs_diff(&product) < 1e-6);
        for phi in [0.0, 0.7, FRAC_PI_2, 2.5] {
            let w = w_state(FRAC_PI_4, phi);
            let (c, _) = intrinsic_coherence(&w, &[vec![0, 1], vec![2]], &opts).unwrap();
            assert!((c - BELL).abs() < 1e-3, "phi = {phi}: {c}");
        }
    }

    #[test]
    fn local_coherence_oracles() {
        let opts = OptimOptions::default();
        let product = product_minus_state(2).unwrap();
        let (c, _) = total_coherence(&product, &computational(2), &opts).unwrap();
        let c_l = local_coherence(&product, &computational(2), &opts).unwrap();
        assert!((c_l - c).abs() < 2e-3);
        let bell = bell_state(BellSign::Minus);
        assert!(local_coherence(&bell, &computational(2), &opts).unwrap() <= 1e-3);
        let diag = QuantumState::diagonal(vec![2, 2], &[0.4, 0.3, 0.2, 0.1]).unwrap();
        assert!(local_coherence(&diag, &computational(2), &opts).unwrap() < 1e-6);
    }

    #[test]
    fn site_and_pair_oracles() {
        let opts = OptimOptions::default();
        let ghz = ghz_state(0.3);
        for s in 0..3 {
            assert!(site_coherence(&ghz, s, &computational(3), &opts).unwrap() < 1e-9);
        }
        let product = product_minus_state(2).unwrap();
        for s in 0..2 {
            let c = site_coherence(&product, s, &computational(2), &opts).unwrap();
            assert!((c - BELL).abs() < 1e-6);
        }
        let w0 = w_state(FRAC_PI_4, 0.0);
        assert!((pairwise_intrinsic(&w0, 0, 2, &opts).unwrap() - BELL).abs() < 2e-3);
        let w90 = w_state(FRAC_PI_4, FRAC_PI_2);
        assert!(pairwise_intrinsic(&w90, 0, 2, &opts).unwrap() < 1e-3);
        for mu in [0.25, 1.0] {
            let rho = werner_ghz(mu, FRAC_PI_4).unwrap();
            assert!(pairwise_intrinsic(&rho, 1, 2, &opts).unwrap() < 1e-3);
        }
        assert!(pairwise_intrinsic(&ghz, 1, 1, &opts).is_err());
    }

    #[test]
    fn ghz_is_strictly_monogamous() {
        let ghz = ghz_state(FRAC_PI_4);
        let m = monogamy(&ghz, &OptimOptions::default()).unwrap();
        assert!((m + BELL).abs() < 2e-3, "{m}");
    }

    #[test]
    fn maximally_mixed_report_is_zero() {
        for n in 1..=3 {
            let rho = QuantumState::maximally_mixed(vec![2; n]);
            let r = decomposition_report(&rho, &computational(n), &Outputs::all(), &OptimOptions::default())
                .unwrap();
            for (k, v) in r.entries() {
                assert!(v.abs() < 1e-12, "{k} = {v}");
            }
            assert!(r.converged);
        }
    }

    #[test]
    fn report_fields_are_consistent() {
        let rho = ghz_state(FRAC_PI_4);
        let r = decomposition_report(&rho, &computational(3), &Outputs::all(), &OptimOptions::default())
            .unwrap();
        let m = r.pairwise[&(0, 1)] + r.pairwise[&(0, 2)] - r.bipartitions[&0];
        assert_eq!(r.monogamy, Some(m));
        assert_eq!(r.full_split, r.c_intrinsic);
        let c_l = qjsd_distance(
            r.separable_minimizer.as_ref().unwrap(),
            r.incoherent_minimizer.as_ref().unwrap(),
        )
        .unwrap();
        assert_eq!(r.c_local, Some(c_l));
        assert!(r.triangle_slack.unwrap() >= -1e-9);
        assert!(r.subadditivity_slack.unwrap() >= -1e-6);
        assert!(r.tri_consistency.is_some());
        for (_, v) in r.entries().iter().filter(|(k, _)| k.starts_with("c_")) {
            assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn selected_outputs_only() {
        let rho = bell_state(BellSign::Plus);
        let r = decomposition_report(
            &rho,
            &computational(2),
            &Outputs::monogamy_only(),
            &OptimOptions::default(),
        )
        .unwrap();
        let keys: Vec<String> = r.entries().into_iter().map(|(k, _)| k).collect();
        assert_eq!(keys, ["c_pair_1_2", "c_bipart_1_rest", "monogamy"]);
        assert!(r.c_total.is_none() && r.incoherent_minimizer.is_none());
        assert!(r.monogamy.unwrap().abs() < 1e-12);
    }

    #[test]
    fn parses_output_lists() {
        assert_eq!(Outputs::parse("all").unwrap(), Outputs::all());
        let o = Outputs::parse("pairwise_first, bipart_first,monogamy").unwrap();
        assert_eq!(o, Outputs::monogamy_only());
        assert!(Outputs::parse("c_total,bogus").is_err());
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.557923045284, 9), "0.557923045");
        assert_eq!(format_sig(-0.5, 9), "-0.5");
        assert_eq!(format_sig(1.0, 9), "1");
        assert_eq!(format_sig(0.0, 9), "0");
        assert_eq!(format_sig(1.234e-7, 9), "1.23400000e-7");
        assert_eq!(format_sig(123.456, 4), "123.5");
        assert_eq!(format_sig(9.9999999999, 9), "10");
    }
}
