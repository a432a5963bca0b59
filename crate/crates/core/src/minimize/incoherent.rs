use log::debug;

use super::{
    dirichlet_logits, restart_rng, run_restarts, softmax, softmax_backward, MinimizationResult,
    OptimOptions, LOG_FLOOR,
};
use crate::error::Result;
use crate::factory::BasisSpec;
use crate::linalg::{hermitize, max_abs, spectrum_entropy, CMatrix, SpectralDecomposition, C64};
use crate::metric::matrix_entropy;
use crate::state::QuantumState;

/// Diagonal weights at or below this are outside the incoherent support.
const DIAGONAL_SUPPORT_TOL: f64 = 1e-14;

/// `J(ρ, diag(p))` over the softmax logits of `p`, with `ρ` expressed in the
/// reference basis.
struct IncoherentObjective {
    rho: CMatrix,
    rho_entropy: f64,
}

impl IncoherentObjective {
    fn new(rho: CMatrix) -> Self {
        let rho_entropy = matrix_entropy(&rho, 2.0);
        Self { rho, rho_entropy }
    }

    fn value_at(&self, p: &[f64]) -> f64 {
        let mut mid = self.rho.scale(0.5);
        for (i, &pi) in p.iter().enumerate() {
            mid[(i, i)] += C64::new(0.5 * pi, 0.0);
        }
        let spec = SpectralDecomposition::of(&mid);
        spectrum_entropy(&spec.eigenvalues, 2.0) - 0.5 * self.rho_entropy - 0.5 * shannon(p)
    }

    fn eval(&self, logits: &[f64], grad: &mut [f64]) -> f64 {
        let p = softmax(logits);
        let n = p.len();
        let mut mid = self.rho.scale(0.5);
        for (i, &pi) in p.iter().enumerate() {
            mid[(i, i)] += C64::new(0.5 * pi, 0.0);
        }
        let spec = SpectralDecomposition::of(&mid);
        let value =
            spectrum_entropy(&spec.eigenvalues, 2.0) - 0.5 * self.rho_entropy - 0.5 * shannon(&p);
        let log_mid: Vec<f64> = spec
            .eigenvalues
            .iter()
            .map(|&l| l.max(LOG_FLOOR).log2())
            .collect();
        // ∂J/∂p_k = ½ (log₂ p_k - (log₂ M)_kk)
        let grad_p: Vec<f64> = (0..n)
            .map(|k| {
                let log_mid_kk: f64 = (0..n)
                    .map(|i| spec.eigenvectors[(k, i)].norm_sqr() * log_mid[i])
                    .sum();
                0.5 * (p[k].max(LOG_FLOOR).log2() - log_mid_kk)
            })
            .collect();
        softmax_backward(&p, &grad_p, grad);
        value
    }
}

fn shannon(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum()
}

/// Closest state to `rho` that is diagonal in the product basis `basis`.
///
/// Restart 0 starts from the dephased state `diag_b(ρ)`; the remaining
/// restarts start from uniformly random diagonal states.
pub fn closest_incoherent(
    rho: &QuantumState,
    basis: &BasisSpec,
    opts: &OptimOptions,
) -> Result<MinimizationResult> {
    opts.validate()?;
    basis.check_dims(rho.dims())?;
    let computational = basis.is_computational();
    let unitary = (!computational).then(|| basis.product_unitary());
    let rotated = match &unitary {
        Some(u) => hermitize(&(u.adjoint() * rho.matrix() * u)),
        None => rho.matrix().clone(),
    };
    let d = rotated.nrows();
    let diagonal: Vec<f64> = (0..d).map(|i| rotated[(i, i)].re.max(0.0)).collect();

    let finish = |probabilities: Vec<f64>,
                  objective: f64,
                  iterations: usize,
                  restart: usize,
                  converged: bool|
     -> Result<MinimizationResult> {
        let mut sigma = CMatrix::zeros(d, d);
        for (i, &p) in probabilities.iter().enumerate() {
            sigma[(i, i)] = C64::new(p, 0.0);
        }
        if let Some(u) = &unitary {
            sigma = hermitize(&(u * sigma * u.adjoint()));
        }
        Ok(MinimizationResult {
            minimizer: QuantumState::trusted(rho.dims().to_vec(), sigma)?,
            objective: objective.max(0.0),
            iterations_used: iterations,
            restart_index: restart,
            converged,
            ansatz: None,
        })
    };

    let support: Vec<usize> = (0..d).filter(|&i| diagonal[i] > DIAGONAL_SUPPORT_TOL).collect();
    let reduced = CMatrix::from_fn(support.len(), support.len(), |r, c| {
        rotated[(support[r], support[c])]
    });
    let weight: f64 = support.iter().map(|&i| diagonal[i]).sum();
    let reduced = hermitize(&reduced.unscale(weight));
    let dephased: Vec<f64> = support.iter().map(|&i| diagonal[i] / weight).collect();
    let embed = |p: &[f64]| {
        let mut full = vec![0.0; d];
        for (&i, &pi) in support.iter().zip(p) {
            full[i] = pi;
        }
        full
    };

    let off_diagonal = {
        let mut m = reduced.clone();
        m.fill_diagonal(C64::new(0.0, 0.0));
        max_abs(&m)
    };
    let objective = IncoherentObjective::new(reduced);
    if support.len() <= 1 || off_diagonal <= DIAGONAL_SUPPORT_TOL {
        // diagonal up to roundoff
        return finish(embed(&dephased), 0.0, 0, 0, true);
    }

    let n = support.len();
    let initial: Vec<f64> = dephased.iter().map(|&p| p.max(1e-12).ln()).collect();
    let best = run_restarts(
        opts.restarts_for(d),
        opts,
        |r| {
            if r == 0 {
                initial.clone()
            } else {
                dirichlet_logits(&mut restart_rng(opts.seed, r), n)
            }
        },
        |x, g| objective.eval(x, g),
    );

    let dephased_value = objective.value_at(&dephased);
    if best.outcome.value < dephased_value - 1e-6 {
        debug!(
            "closest incoherent state improves on the dephased state: {} < {}",
            best.outcome.value, dephased_value
        );
    }
    let p = softmax(&best.outcome.x);
    let value = objective.value_at(&p);
    finish(
        embed(&p),
        value,
        best.outcome.iterations,
        best.restart,
        best.outcome.converged,
    )
}
