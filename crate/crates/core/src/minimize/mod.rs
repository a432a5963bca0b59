//! Constrained minimizations of the Jensen-Shannon divergence.
//!
//! [`closest_incoherent`] searches states diagonal in a fixed product basis;
//! [`closest_separable`] searches mixtures of product pure states over a site
//! partition with free local bases. Both minimize `J` itself (smooth) and
//! leave the square root to callers.
//!
//! Before optimizing, each problem is compressed onto the support that can
//! contain a minimizer. For the separable problem this is the tensor product
//! of the supports of the group marginals: the local channel that projects
//! onto a group's support and re-prepares a fixed support state on failure
//! maps separable states to separable states and fixes `ρ`, so by data
//! processing it cannot increase `J`. The same argument with the dephased
//! support of `ρ` applies to the incoherent problem. A pure ten-site state
//! split as one site against the rest therefore becomes a 2×2 problem.

mod ansatz;
mod incoherent;
mod separable;

pub use ansatz::SeparableAnsatz;
pub use incoherent::closest_incoherent;
pub use separable::{closest_separable, default_components};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{invalid_arg, Result};
use crate::optim;
use crate::state::QuantumState;

/// Marginal eigenvalues at or below this are treated as outside the support.
pub(crate) const SUPPORT_TOL: f64 = 1e-13;

/// Numerical floor applied to eigenvalues before taking logarithms.
pub(crate) const LOG_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimOptions {
    /// Number of starting points; `None` picks 10 for dimension ≤ 64, else 4.
    pub restarts: Option<usize>,
    pub max_iterations: usize,
    pub objective_tolerance: f64,
    pub seed: u64,
    /// Component count of the separable ansatz; `None` uses [`default_components`].
    pub ansatz_components: Option<usize>,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            restarts: None,
            max_iterations: 2000,
            objective_tolerance: 1e-9,
            seed: 0,
            ansatz_components: None,
        }
    }
}

impl OptimOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == Some(0) {
            return Err(invalid_arg("restarts must be at least 1"));
        }
        if !(self.objective_tolerance > 0.0) {
            return Err(invalid_arg("objective tolerance must be positive"));
        }
        if self.ansatz_components == Some(0) {
            return Err(invalid_arg("ansatz needs at least one component"));
        }
        Ok(())
    }

    pub fn restarts_for(&self, dimension: usize) -> usize {
        self.restarts
            .unwrap_or(if dimension <= 64 { 10 } else { 4 })
    }

    /// Same options with the seed replaced by one derived from `salt`.
    pub fn derived(&self, salt: u64) -> Self {
        Self {
            seed: derive_seed(self.seed, salt),
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug)]
pub struct MinimizationResult {
    pub minimizer: QuantumState,
    /// `J(ρ, minimizer)`, not its square root.
    pub objective: f64,
    pub iterations_used: usize,
    pub restart_index: usize,
    pub converged: bool,
    /// Decomposition of the minimizer (separable searches only).
    pub ansatz: Option<SeparableAnsatz>,
}

impl MinimizationResult {
    pub fn distance(&self) -> f64 {
        self.objective.sqrt()
    }
}

/// SplitMix64 finalizer over `base` and a counter.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, restart as u64))
}

/// Uniform sample from the probability simplex.
pub(crate) fn dirichlet_logits(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| (x / total).max(1e-300).ln()).collect()
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&a| (a - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Chain rule through softmax: `∂/∂a_j = w_j (g_j - Σ_k w_k g_k)`.
pub(crate) fn softmax_backward(weights: &[f64], grad_w: &[f64], out: &mut [f64]) {
    let mean: f64 = weights.iter().zip(grad_w).map(|(w, g)| w * g).sum();
    for ((o, w), g) in out.iter_mut().zip(weights).zip(grad_w) {
        *o = w * (g - mean);
    }
}

pub(crate) struct RestartOutcome {
    pub restart: usize,
    pub outcome: optim::LbfgsOutcome,
}

/// Runs every restart and keeps the best. Objectives within `tol` of the
/// minimum count as ties, resolved toward the lowest restart index.
pub(crate) fn run_restarts<F, S>(
    restarts: usize,
    opts: &OptimOptions,
    start: S,
    objective: F,
) -> RestartOutcome
where
    S: Fn(usize) -> Vec<f64> + Sync,
    F: Fn(&[f64], &mut [f64]) -> f64 + Sync,
{
    let outcomes: Vec<RestartOutcome> = (0..restarts)
        .into_par_iter()
        .map(|r| RestartOutcome {
            restart: r,
            outcome: optim::minimize(
                &objective,
                start(r),
                opts.max_iterations,
                opts.objective_tolerance,
            ),
        })
        .collect();
    select_best(outcomes, opts.objective_tolerance)
}

pub(crate) fn select_best(outcomes: Vec<RestartOutcome>, tol: f64) -> RestartOutcome {
    let best = outcomes
        .iter()
        .map(|o| o.outcome.value)
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    let chosen = outcomes
        .iter()
        .position(|o| o.outcome.value <= best + tol)
        .unwrap_or(0);
    outcomes.into_iter().nth(chosen).expect("at least one restart")
}
