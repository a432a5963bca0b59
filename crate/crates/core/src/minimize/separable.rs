use nalgebra::SVD;
use rand_distr::{Distribution, StandardNormal};

use super::ansatz::validate_partition;
use super::{
    dirichlet_logits, restart_rng, run_restarts, softmax, softmax_backward, MinimizationResult,
    OptimOptions, LOG_FLOOR, SUPPORT_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{
    hermitize, real_trace, spectrum_entropy, support_basis, CMatrix, CVector, SpectralDecomposition,
    C64, ZERO,
};
use crate::metric::matrix_entropy;
use crate::minimize::SeparableAnsatz;
use crate::state::QuantumState;

pub const MAX_DEFAULT_COMPONENTS: usize = 64;

/// Default ansatz size for factors of the given (support) dimensions.
///
/// 4 for two factors of total dimension ≤ 16, 8 for three qubits, 16
/// otherwise, raised to twice the total dimension up to
/// [`MAX_DEFAULT_COMPONENTS`]. Factors of dimension 1 are not counted.
pub fn default_components(factor_dims: &[usize]) -> usize {
    let active: Vec<usize> = factor_dims.iter().copied().filter(|&d| d > 1).collect();
    let total: usize = active.iter().product();
    let base = match active.len() {
        2 if total <= 16 => 4,
        3 if active.iter().all(|&d| d == 2) => 8,
        _ => 16,
    };
    base.max((2 * total).min(MAX_DEFAULT_COMPONENTS))
}

/// `J(ρ, Σ_k w_k ⊗_g |ψ̂_{k,g}⟩⟨ψ̂_{k,g}|)` over softmax logits and
/// unnormalized complex factor vectors.
///
/// Parameters: `K` logits, then for each component and group the
/// interleaved real and imaginary parts of the factor vector.
pub(crate) struct SeparableObjective {
    rho: CMatrix,
    rho_entropy: f64,
    factor_dims: Vec<usize>,
    components: usize,
    /// `indices[x][g]` is the group-`g` index of the joint basis state `x`.
    indices: Vec<Vec<usize>>,
}

struct Evaluated {
    weights: Vec<f64>,
    /// Normalized factors with their pre-normalization norms.
    factors: Vec<Vec<(CVector, f64)>>,
    products: Vec<CVector>,
    sigma: CMatrix,
}

impl SeparableObjective {
    pub(crate) fn new(rho: CMatrix, factor_dims: Vec<usize>, components: usize) -> Self {
        let d: usize = factor_dims.iter().product();
        let strides = crate::linalg::strides(&factor_dims);
        let indices = (0..d)
            .map(|x| {
                factor_dims
                    .iter()
                    .zip(&strides)
                    .map(|(&dim, &st)| (x / st) % dim)
                    .collect()
            })
            .collect();
        let rho_entropy = matrix_entropy(&rho, 2.0);
        Self {
            rho,
            rho_entropy,
            factor_dims,
            components,
            indices,
        }
    }

    pub(crate) fn parameter_count(&self) -> usize {
        self.components * (1 + 2 * self.factor_dims.iter().sum::<usize>())
    }

    fn unpack(&self, params: &[f64]) -> Option<Evaluated> {
        let k = self.components;
        let weights = softmax(&params[..k]);
        let mut offset = k;
        let mut factors = Vec::with_capacity(k);
        for _ in 0..k {
            let mut component = Vec::with_capacity(self.factor_dims.len());
            for &dim in &self.factor_dims {
                let v = CVector::from_fn(dim, |i, _| {
                    C64::new(params[offset + 2 * i], params[offset + 2 * i + 1])
                });
                offset += 2 * dim;
                let norm = v.norm();
                if !(norm > 1e-150) || !norm.is_finite() {
                    return None;
                }
                component.push((v.unscale(norm), norm));
            }
            factors.push(component);
        }
        let d = self.indices.len();
        let products: Vec<CVector> = factors
            .iter()
            .map(|component| {
                CVector::from_fn(d, |x, _| {
                    self.indices[x]
                        .iter()
                        .zip(component)
                        .fold(C64::new(1.0, 0.0), |acc, (&i, (v, _))| acc * v[i])
                })
            })
            .collect();
        let mut sigma = CMatrix::zeros(d, d);
        for (w, psi) in weights.iter().zip(&products) {
            sigma.ger(C64::new(*w, 0.0), psi, &psi.conjugate(), C64::new(1.0, 0.0));
        }
        Some(Evaluated {
            weights,
            factors,
            products,
            sigma: hermitize(&sigma),
        })
    }

    pub(crate) fn eval(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let Some(ev) = self.unpack(params) else {
            return f64::INFINITY;
        };
        let sigma_spec = SpectralDecomposition::of(&ev.sigma);
        let mid = (&self.rho + &ev.sigma).scale(0.5);
        let mid_spec = SpectralDecomposition::of(&mid);
        let value = spectrum_entropy(&mid_spec.eigenvalues, 2.0)
            - 0.5 * self.rho_entropy
            - 0.5 * spectrum_entropy(&sigma_spec.eigenvalues, 2.0);

        // dJ = Tr(G dσ) with G = ½ (log₂ σ - log₂ M)
        let log2 = |x: f64| x.max(LOG_FLOOR).log2();
        let g_matrix = (sigma_spec.apply_function(log2) - mid_spec.apply_function(log2)).scale(0.5);

        let k = self.components;
        let mut grad_w = vec![0.0; k];
        let mut offset = k;
        for c in 0..k {
            let v = &g_matrix * &ev.products[c];
            let expectation = ev.products[c].dotc(&v).re;
            grad_w[c] = expectation;
            let w = ev.weights[c];
            for (g, &dim) in self.factor_dims.iter().enumerate() {
                // contraction of Gψ with the conjugated factors of all other groups
                let mut u = CVector::from_element(dim, ZERO);
                for (x, idx) in self.indices.iter().enumerate() {
                    let mut coeff = v[x];
                    for (h, &i) in idx.iter().enumerate() {
                        if h != g {
                            coeff *= ev.factors[c][h].0[i].conj();
                        }
                    }
                    u[idx[g]] += coeff;
                }
                let (unit, norm) = &ev.factors[c][g];
                let scale = 2.0 * w / norm;
                for i in 0..dim {
                    let z = (u[i] - unit[i] * expectation) * scale;
                    grad[offset + 2 * i] = z.re;
                    grad[offset + 2 * i + 1] = z.im;
                }
                offset += 2 * dim;
            }
        }
        softmax_backward(&ev.weights, &grad_w, &mut grad[..k]);
        value
    }

    fn value(&self, params: &[f64]) -> f64 {
        let mut scratch = vec![0.0; params.len()];
        self.eval(params, &mut scratch)
    }

    fn realized(&self, params: &[f64]) -> (Vec<f64>, Vec<Vec<CVector>>) {
        let ev = self.unpack(params).expect("finite optimum");
        let factors = ev
            .factors
            .into_iter()
            .map(|component| component.into_iter().map(|(v, _)| v).collect())
            .collect();
        (ev.weights, factors)
    }

    fn pack(&self, weights: &[f64], factors: &[Vec<CVector>]) -> Vec<f64> {
        let mut params: Vec<f64> = weights.iter().map(|&w| w.max(1e-300).ln()).collect();
        for component in factors {
            for v in component {
                for z in v.iter() {
                    params.push(z.re);
                    params.push(z.im);
                }
            }
        }
        params
    }

    fn random_start(&self, seed: u64, restart: usize) -> Vec<f64> {
        let mut rng = restart_rng(seed, restart);
        let mut params = dirichlet_logits(&mut rng, self.components);
        let rest = self.parameter_count() - self.components;
        params.extend((0..rest).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
        params
    }

    /// Dominant product terms of the Schmidt decompositions of `ρ`'s
    /// eigenvectors, weighted by eigenvalue. For a pure state this is the
    /// state dephased in its own Schmidt basis.
    fn schmidt_start(&self) -> Vec<f64> {
        let spec = SpectralDecomposition::of(&self.rho);
        let mut terms: Vec<(f64, Vec<CVector>)> = Vec::new();
        for (i, &lambda) in spec.eigenvalues.iter().enumerate() {
            if lambda <= SUPPORT_TOL {
                continue;
            }
            let psi = spec.eigenvectors.column(i).into_owned();
            for (w, factors) in product_terms(&psi, &self.factor_dims) {
                terms.push((lambda * w, factors));
            }
        }
        terms.sort_by(|a, b| b.0.total_cmp(&a.0));
        terms.truncate(self.components);
        let m = terms.len();
        // duplicate terms to fill all components without changing the state
        let copies: Vec<usize> = (0..m)
            .map(|t| (t..self.components).step_by(m).count())
            .collect();
        let total: f64 = terms.iter().map(|t| t.0).sum();
        let mut weights = Vec::with_capacity(self.components);
        let mut factors = Vec::with_capacity(self.components);
        for c in 0..self.components {
            let t = c % m;
            weights.push(terms[t].0 / total / copies[t] as f64);
            factors.push(terms[t].1.clone());
        }
        self.pack(&weights, &factors)
    }
}

/// Product decomposition of `psi` by successive bipartite Schmidt splits,
/// first factor against the rest. Returns `(weight, normalized factors)`.
fn product_terms(psi: &CVector, dims: &[usize]) -> Vec<(f64, Vec<CVector>)> {
    let norm2 = psi.norm_squared();
    if dims.len() == 1 {
        return vec![(norm2, vec![psi.unscale(norm2.sqrt())])];
    }
    let first = dims[0];
    let rest: usize = dims[1..].iter().product();
    let coeffs = CMatrix::from_fn(first, rest, |i, j| psi[i * rest + j]);
    let svd = SVD::new(coeffs, true, true);
    let u = svd.u.expect("left singular vectors");
    let v_t = svd.v_t.expect("right singular vectors");
    let mut out = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        let w = s * s;
        if w <= 1e-14 * norm2 {
            continue;
        }
        let left = u.column(k).into_owned();
        let right = v_t.row(k).transpose();
        for (sub_w, sub_factors) in product_terms(&right, &dims[1..]) {
            let mut factors = Vec::with_capacity(dims.len());
            factors.push(left.clone());
            factors.extend(sub_factors);
            out.push((w * sub_w, factors));
        }
    }
    out
}

/// Closest separable state across the partition `groups` (each group is one
/// tensor factor, with sites given 0-based).
///
/// Restart 0 starts from the Schmidt-dephased state of `ρ`; the remaining
/// restarts from random weights and Gaussian factor vectors.
pub fn closest_separable(
    rho: &QuantumState,
    groups: &[Vec<usize>],
    opts: &OptimOptions,
) -> Result<MinimizationResult> {
    opts.validate()?;
    validate_partition(groups, rho.num_sites())?;
    let groups: Vec<Vec<usize>> = groups
        .iter()
        .map(|g| {
            let mut g = g.clone();
            g.sort_unstable();
            g
        })
        .collect();
    let order: Vec<usize> = groups.iter().flatten().copied().collect();
    let grouped = rho.permute_sites(&order)?;
    let site_dims = rho.dims().to_vec();

    // support of each group marginal
    let mut start = 0;
    let mut isometries = Vec::with_capacity(groups.len());
    for g in &groups {
        let keep: Vec<usize> = (start..start + g.len()).collect();
        start += g.len();
        let marginal = grouped.partial_trace(&keep)?;
        let v = support_basis(marginal.matrix(), SUPPORT_TOL);
        if v.ncols() == 0 {
            return Err(Error::InvalidState("group marginal has no support".into()));
        }
        isometries.push(v);
    }
    let isometry = isometries
        .iter()
        .skip(1)
        .fold(isometries[0].clone(), |acc, v| acc.kronecker(v));
    let compressed = isometry.adjoint() * grouped.matrix() * &isometry;
    let compressed = hermitize(&compressed.unscale(real_trace(&compressed)));
    let factor_dims: Vec<usize> = isometries.iter().map(|v| v.ncols()).collect();
    let reduced_dim = compressed.nrows();

    let components = opts
        .ansatz_components
        .unwrap_or_else(|| default_components(&factor_dims));
    let objective = SeparableObjective::new(compressed.clone(), factor_dims.clone(), components);

    let lift = |weights: Vec<f64>, factors: Vec<Vec<CVector>>| -> SeparableAnsatz {
        let factors = factors
            .into_iter()
            .map(|component| {
                component
                    .iter()
                    .zip(&isometries)
                    .map(|(v, iso)| iso * v)
                    .collect()
            })
            .collect();
        SeparableAnsatz {
            groups: groups.clone(),
            site_dims: site_dims.clone(),
            weights,
            factors,
        }
    };

    let active = factor_dims.iter().filter(|&&d| d > 1).count();
    let mixed = {
        let target = CMatrix::identity(reduced_dim, reduced_dim).unscale(reduced_dim as f64);
        crate::linalg::max_abs(&(&compressed - target)) <= 1e-14
    };
    if active <= 1 || mixed {
        // already a product across the partition on the reduced support
        let (weights, factors) = if mixed {
            maximally_mixed_ansatz(&factor_dims)
        } else {
            let (w, f) = objective.realized(&objective.schmidt_start());
            (w, f)
        };
        return Ok(MinimizationResult {
            minimizer: rho.clone(),
            objective: 0.0,
            iterations_used: 0,
            restart_index: 0,
            converged: true,
            ansatz: Some(lift(weights, factors)),
        });
    }

    let schmidt = objective.schmidt_start();
    let best = run_restarts(
        opts.restarts_for(rho.dim()),
        opts,
        |r| {
            if r == 0 {
                schmidt.clone()
            } else {
                objective.random_start(opts.seed, r)
            }
        },
        |x, g| objective.eval(x, g),
    );
    let value = objective.value(&best.outcome.x).max(0.0);
    let (weights, factors) = objective.realized(&best.outcome.x);
    let mut sigma = CMatrix::zeros(reduced_dim, reduced_dim);
    let reduced_products: Vec<CVector> = factors
        .iter()
        .map(|component| {
            component
                .iter()
                .skip(1)
                .fold(component[0].clone(), |acc, v| acc.kronecker(v))
        })
        .collect();
    for (w, psi) in weights.iter().zip(&reduced_products) {
        sigma.ger(C64::new(*w, 0.0), psi, &psi.conjugate(), C64::new(1.0, 0.0));
    }
    let minimizer = embed(&hermitize(&sigma), &isometry, &order, &site_dims)?;
    Ok(MinimizationResult {
        minimizer,
        objective: value,
        iterations_used: best.outcome.iterations,
        restart_index: best.restart,
        converged: best.outcome.converged,
        ansatz: Some(lift(weights, factors)),
    })
}

/// `I/d` on each factor written as an equal mixture of product basis states.
fn maximally_mixed_ansatz(factor_dims: &[usize]) -> (Vec<f64>, Vec<Vec<CVector>>) {
    let total: usize = factor_dims.iter().product();
    let strides = crate::linalg::strides(factor_dims);
    let factors = (0..total)
        .map(|x| {
            factor_dims
                .iter()
                .zip(&strides)
                .map(|(&d, &st)| {
                    let mut v = CVector::zeros(d);
                    v[(x / st) % d] = C64::new(1.0, 0.0);
                    v
                })
                .collect()
        })
        .collect();
    (vec![1.0 / total as f64; total], factors)
}

/// `V σ V†` mapped back to the original site order.
fn embed(
    sigma: &CMatrix,
    isometry: &CMatrix,
    order: &[usize],
    site_dims: &[usize],
) -> Result<QuantumState> {
    let grouped = isometry * sigma * isometry.adjoint();
    let map = crate::state::permutation_map(site_dims, order)?;
    let d = grouped.nrows();
    let mut matrix = CMatrix::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            matrix[(map[r], map[c])] = grouped[(r, c)];
        }
    }
    QuantumState::trusted(site_dims.to_vec(), hermitize(&matrix))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::{bell_state, ghz_state, BellSign};
    use crate::metric::qjsd;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_component_counts() {
        assert_eq!(default_components(&[2, 2]), 8);
        assert_eq!(default_components(&[4, 4]), 32);
        assert_eq!(default_components(&[2, 2, 2]), 16);
        assert_eq!(default_components(&[2, 1, 2]), 8);
        assert_eq!(default_components(&[2, 4]), 16);
        assert_eq!(default_components(&[4, 8]), 64);
        assert_eq!(default_components(&[2; 10]), 64);
    }

    #[test]
    fn mixed_bipartition_is_below_total_coherence() {
        // diagonal states are separable across every cut
        let rho = crate::factory::werner_ghz(0.5, std::f64::consts::FRAC_PI_4).unwrap();
        let opts = OptimOptions::default();
        let sep = closest_separable(&rho, &[vec![0], vec![1, 2]], &opts).unwrap();
        let basis = crate::factory::BasisSpec::computational(&[2, 2, 2]);
        let inc = crate::minimize::closest_incoherent(&rho, &basis, &opts).unwrap();
        assert!(sep.objective <= inc.objective + 1e-9);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rho = QuantumState::random_mixed(vec![2, 2, 2], 8, &mut rng);
        let obj = SeparableObjective::new(rho.matrix().clone(), vec![2, 4], 3);
        let x = obj.random_start(5, 1);
        let mut g = vec![0.0; x.len()];
        obj.eval(&x, &mut g);
        let mut scratch = vec![0.0; x.len()];
        for i in 0..x.len() {
            let h = 1e-6;
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let fd = (obj.eval(&xp, &mut scratch) - obj.eval(&xm, &mut scratch)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "component {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn gradient_with_three_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let rho = QuantumState::random_mixed(vec![2, 2, 2], 3, &mut rng);
        let obj = SeparableObjective::new(rho.matrix().clone(), vec![2, 2, 2], 8);
        let x = obj.random_start(9, 2);
        let mut g = vec![0.0; x.len()];
        obj.eval(&x, &mut g);
        let mut scratch = vec![0.0; x.len()];
        for i in (0..x.len()).step_by(3) {
            let h = 1e-6;
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let fd = (obj.eval(&xp, &mut scratch) - obj.eval(&xm, &mut scratch)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "component {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn schmidt_terms_of_ghz() {
        let psi = crate::factory::ghz_vector(std::f64::consts::FRAC_PI_4);
        let terms = product_terms(&psi, &[2, 2, 2]);
        assert_eq!(terms.len(), 2);
        for (w, _) in &terms {
            assert!((w - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn schmidt_start_reproduces_dephased_bell() {
        let bell = bell_state(BellSign::Minus);
        let obj = SeparableObjective::new(bell.matrix().clone(), vec![2, 2], 4);
        let start = obj.schmidt_start();
        let expected = (0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2()).abs() - 0.5;
        assert!((obj.value(&start) - expected).abs() < 1e-12);
    }

    #[test]
    fn product_state_has_zero_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let a = QuantumState::random_mixed(vec![2], 2, &mut rng);
        let b = QuantumState::random_mixed(vec![2], 2, &mut rng);
        let res = closest_separable(&a.tensor(&b), &[vec![0], vec![1]], &OptimOptions::default())
            .unwrap();
        assert!(res.objective < 1e-9, "{}", res.objective);
    }

    #[test]
    fn minimizer_reconstructs_from_ansatz() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let rho = QuantumState::random_mixed(vec![2, 2, 2], 2, &mut rng);
        let res = closest_separable(&rho, &[vec![1], vec![0, 2]], &OptimOptions::default()).unwrap();
        let realized = res.ansatz.as_ref().unwrap().realize().unwrap();
        assert!(realized.max_abs_diff(&res.minimizer) < 1e-10);
        assert!((qjsd(&rho, &res.minimizer).unwrap() - res.objective).abs() < 1e-10);
    }

    #[test]
    fn ghz_full_split_matches_dephased_candidate() {
        let res = closest_separable(
            &ghz_state(std::f64::consts::FRAC_PI_4),
            &[vec![0], vec![1], vec![2]],
            &OptimOptions::default(),
        )
        .unwrap();
        let expected = 0.811_278_124_459_132_8 - 0.5;
        assert!((res.objective - expected).abs() < 1e-4, "{}", res.objective);
        let dephased = QuantumState::diagonal(
            vec![2, 2, 2],
            &[0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5],
        )
        .unwrap();
        assert!(res.minimizer.max_abs_diff(&dephased) < 1e-3);
    }

    #[test]
    fn maximally_mixed_input_returns_immediately() {
        let rho = QuantumState::maximally_mixed(vec![2, 2]);
        let res = closest_separable(&rho, &[vec![0], vec![1]], &OptimOptions::default()).unwrap();
        assert_eq!(res.objective, 0.0);
        assert_eq!(res.iterations_used, 0);
        assert!(res.minimizer.max_abs_diff(&rho) < 1e-15);
        assert!(res.ansatz.unwrap().realize().unwrap().max_abs_diff(&rho) < 1e-15);
    }
}
