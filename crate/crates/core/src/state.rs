//! Density matrices over tensor products of finite-dimensional sites.
//!
//! Site 0 is the most significant tensor factor: the computational basis
//! index of `|i_0 i_1 … i_{N-1}⟩` is `Σ_s i_s · Π_{t>s} d_t`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid_arg, Error, Result};
use crate::linalg::{
    hermitian_eigenvalues, hermiticity_error, hermitize, kron, max_abs, outer, real_trace,
    strides, SpectralDecomposition, CMatrix, CVector, C64, ZERO,
};

/// Largest tolerated `|ρ - ρ†|` entry, `|Tr ρ - 1|`, and negative eigenvalue.
pub const VALIDATION_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl QuantumState {
    /// Validates and hermitizes `matrix`.
    pub fn new(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        check_shape(&dims, &matrix)?;
        let herm_err = hermiticity_error(&matrix);
        if herm_err > VALIDATION_TOL {
            return Err(Error::InvalidState(format!(
                "matrix is not Hermitian (max |M - M†| = {herm_err:e})"
            )));
        }
        let state = Self::trusted(dims, hermitize(&matrix))?;
        let min_eig = hermitian_eigenvalues(&state.matrix)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -VALIDATION_TOL {
            return Err(Error::InvalidState(format!(
                "matrix is not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(state)
    }

    /// `|ψ⟩⟨ψ|` for the normalized `amplitudes`.
    pub fn from_pure(dims: Vec<usize>, amplitudes: &CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(invalid_arg("pure state amplitudes have zero or non-finite norm"));
        }
        let psi = amplitudes.unscale(norm);
        let matrix = outer(&psi);
        check_shape(&dims, &matrix)?;
        Self::trusted(dims, hermitize(&matrix))
    }

    /// For matrices that are positive semidefinite by construction (convex
    /// mixtures of projectors, isometric embeddings). Shape and trace are
    /// still checked; the eigenvalue check is skipped.
    pub(crate) fn trusted(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        check_shape(&dims, &matrix)?;
        let tr = real_trace(&matrix);
        if (tr - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        Ok(Self { dims, matrix })
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let d: usize = dims.iter().product();
        let matrix = CMatrix::identity(d, d).unscale(d as f64);
        Self { dims, matrix }
    }

    /// Computational basis projector `|index⟩⟨index|`.
    pub fn basis_state(dims: Vec<usize>, index: usize) -> Result<Self> {
        let d: usize = dims.iter().product();
        if index >= d {
            return Err(invalid_arg(format!("basis index {index} out of range for dimension {d}")));
        }
        let mut matrix = CMatrix::zeros(d, d);
        matrix[(index, index)] = C64::new(1.0, 0.0);
        Ok(Self { dims, matrix })
    }

    /// Diagonal state `diag(probabilities)`.
    pub fn diagonal(dims: Vec<usize>, probabilities: &[f64]) -> Result<Self> {
        if probabilities.iter().any(|&p| p < -VALIDATION_TOL) {
            return Err(invalid_arg("negative probability"));
        }
        let d = probabilities.len();
        let mut matrix = CMatrix::zeros(d, d);
        for (i, &p) in probabilities.iter().enumerate() {
            matrix[(i, i)] = C64::new(p.max(0.0), 0.0);
        }
        Self::trusted(dims, matrix)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn num_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Spectrum with eigenvalues clipped to `[0, 1]` and renormalized.
    pub fn spectrum(&self) -> SpectralDecomposition {
        let mut spec = SpectralDecomposition::of(&self.matrix);
        for x in spec.eigenvalues.iter_mut() {
            *x = x.clamp(0.0, 1.0);
        }
        let total: f64 = spec.eigenvalues.iter().sum();
        if total > 0.0 {
            for x in spec.eigenvalues.iter_mut() {
                *x /= total;
            }
        }
        spec
    }

    /// `self ⊗ other`, with `self`'s sites first.
    pub fn tensor(&self, other: &QuantumState) -> QuantumState {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        QuantumState {
            dims,
            matrix: kron(&self.matrix, &other.matrix),
        }
    }

    /// Reduced state on the sites in `keep` (0-based, strictly increasing).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<QuantumState> {
        let n = self.num_sites();
        if keep.is_empty() {
            return Err(invalid_arg("partial trace must keep at least one site"));
        }
        if keep.iter().any(|&s| s >= n) {
            return Err(invalid_arg(format!("site index out of range for {n} sites")));
        }
        if keep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid_arg("kept sites must be strictly increasing (no duplicates)"));
        }
        if keep.len() == n {
            return Ok(self.clone());
        }
        let traced: Vec<usize> = (0..n).filter(|s| !keep.contains(s)).collect();
        let kept_offsets = subsystem_offsets(&self.dims, keep);
        let traced_offsets = subsystem_offsets(&self.dims, &traced);
        let dk = kept_offsets.len();
        let mut out = CMatrix::zeros(dk, dk);
        for (a, &oa) in kept_offsets.iter().enumerate() {
            for (b, &ob) in kept_offsets.iter().enumerate() {
                let mut acc = ZERO;
                for &ot in &traced_offsets {
                    acc += self.matrix[(oa + ot, ob + ot)];
                }
                out[(a, b)] = acc;
            }
        }
        let dims = keep.iter().map(|&s| self.dims[s]).collect();
        Ok(QuantumState {
            dims,
            matrix: hermitize(&out),
        })
    }

    /// Reorders sites: site `i` of the result is site `order[i]` of `self`.
    pub fn permute_sites(&self, order: &[usize]) -> Result<QuantumState> {
        let map = permutation_map(&self.dims, order)?;
        let d = self.dim();
        let matrix = CMatrix::from_fn(d, d, |r, c| self.matrix[(map[r], map[c])]);
        let dims = order.iter().map(|&s| self.dims[s]).collect();
        Ok(QuantumState { dims, matrix })
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, unitary: &CMatrix) -> Result<QuantumState> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(invalid_arg("unitary dimension does not match state"));
        }
        let matrix = hermitize(&(unitary * &self.matrix * unitary.adjoint()));
        Ok(QuantumState {
            dims: self.dims.clone(),
            matrix,
        })
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalized `psi`.
    pub fn fidelity_with_pure(&self, psi: &CVector) -> f64 {
        (psi.adjoint() * &self.matrix * psi)[(0, 0)].re
    }

    /// `½ ‖ρ - σ‖₁`.
    pub fn trace_distance(&self, other: &QuantumState) -> Result<f64> {
        if self.dims != other.dims {
            return Err(invalid_arg("dimension mismatch"));
        }
        let diff = &self.matrix - &other.matrix;
        Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|x| x.abs()).sum::<f64>())
    }

    pub fn max_abs_diff(&self, other: &QuantumState) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }

    pub fn is_maximally_mixed(&self, tol: f64) -> bool {
        let d = self.dim() as f64;
        max_abs(&(&self.matrix - CMatrix::identity(self.dim(), self.dim()).unscale(d))) <= tol
    }

    /// Random state `G G† / Tr(G G†)` with a complex standard normal `d × rank` matrix `G`.
    pub fn random_mixed<R: Rng + ?Sized>(dims: Vec<usize>, rank: usize, rng: &mut R) -> Self {
        let d: usize = dims.iter().product();
        let rank = rank.clamp(1, d);
        let g = CMatrix::from_fn(d, rank, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let gg = &g * g.adjoint();
        let tr = real_trace(&gg);
        QuantumState {
            dims,
            matrix: hermitize(&gg.unscale(tr)),
        }
    }

    pub fn random_pure<R: Rng + ?Sized>(dims: Vec<usize>, rng: &mut R) -> Self {
        Self::random_mixed(dims, 1, rng)
    }
}

fn check_shape(dims: &[usize], matrix: &CMatrix) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(invalid_arg("dims must be a nonempty list of positive integers"));
    }
    let d: usize = dims.iter().product();
    if matrix.nrows() != d || matrix.ncols() != d {
        return Err(invalid_arg(format!(
            "matrix is {}x{}, expected {d}x{d} for dims {dims:?}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    Ok(())
}

/// Flat offsets contributed by every joint configuration of `sites`, in
/// row-major order over those sites.
pub(crate) fn subsystem_offsets(dims: &[usize], sites: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut offsets = vec![0usize];
    for &s in sites {
        let mut next = Vec::with_capacity(offsets.len() * dims[s]);
        for &o in &offsets {
            for i in 0..dims[s] {
                next.push(o + i * st[s]);
            }
        }
        offsets = next;
    }
    offsets
}

/// `map[new_index] = old_index` for the reordering `order`.
pub(crate) fn permutation_map(dims: &[usize], order: &[usize]) -> Result<Vec<usize>> {
    let n = dims.len();
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(invalid_arg("permutation length does not match site count"));
    }
    for &s in order {
        if s >= n || seen[s] {
            return Err(invalid_arg("invalid site permutation"));
        }
        seen[s] = true;
    }
    Ok(subsystem_offsets(dims, order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ket(amps: &[f64]) -> CVector {
        CVector::from_iterator(amps.len(), amps.iter().map(|&a| C64::new(a, 0.0)))
    }

    fn bell_minus() -> QuantumState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        QuantumState::from_pure(vec![2, 2], &ket(&[h, 0.0, 0.0, -h])).unwrap()
    }

    #[test]
    fn tensor_of_basis_states() {
        let zero = QuantumState::basis_state(vec![2], 0).unwrap();
        let t = zero.tensor(&zero);
        assert_eq!(t.dims(), &[2, 2]);
        let expected = QuantumState::basis_state(vec![2, 2], 0).unwrap();
        assert_eq!(t.max_abs_diff(&expected), 0.0);
    }

    #[test]
    fn tensor_of_mixed_and_plus() {
        let mixed = QuantumState::maximally_mixed(vec![2]);
        let t = mixed.tensor(&mixed);
        assert!(t.max_abs_diff(&QuantumState::maximally_mixed(vec![2, 2])) < 1e-16);

        let plus = QuantumState::from_pure(vec![2], &ket(&[1.0, 1.0])).unwrap();
        let pp = plus.tensor(&plus);
        for z in pp.matrix().iter() {
            assert!((z - C64::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn tensor_ordering_first_factor_most_significant() {
        let one = QuantumState::basis_state(vec![2], 1).unwrap();
        let zero = QuantumState::basis_state(vec![2], 0).unwrap();
        // |1⟩⊗|0⟩ = |10⟩ has index 2
        let t = one.tensor(&zero);
        assert_eq!(t.matrix()[(2, 2)], C64::new(1.0, 0.0));
    }

    #[test]
    fn partial_trace_of_bell_is_mixed() {
        let r = bell_minus().partial_trace(&[0]).unwrap();
        assert!(r.is_maximally_mixed(1e-15));
        let r = bell_minus().partial_trace(&[1]).unwrap();
        assert!(r.is_maximally_mixed(1e-15));
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = QuantumState::random_mixed(vec![2], 2, &mut rng);
        let b = QuantumState::random_mixed(vec![2, 2], 3, &mut rng);
        let ab = a.tensor(&b);
        assert!(ab.partial_trace(&[0]).unwrap().max_abs_diff(&a) < 1e-14);
        assert!(ab.partial_trace(&[1, 2]).unwrap().max_abs_diff(&b) < 1e-14);
        let full = ab.partial_trace(&[0, 1, 2]).unwrap();
        assert_eq!(full, ab);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = QuantumState::random_mixed(vec![2, 2, 2], 8, &mut rng);
        for keep in [vec![0], vec![1], vec![2], vec![0, 2], vec![1, 2]] {
            let r = s.partial_trace(&keep).unwrap();
            assert!((real_trace(r.matrix()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_indices() {
        let s = bell_minus();
        assert!(s.partial_trace(&[]).is_err());
        assert!(s.partial_trace(&[2]).is_err());
        assert!(s.partial_trace(&[1, 1]).is_err());
        assert!(s.partial_trace(&[1, 0]).is_err());
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let nonherm = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.5, 0.0), C64::new(0.1, 0.0), C64::new(0.2, 0.0), C64::new(0.5, 0.0)],
        );
        assert!(QuantumState::new(vec![2], nonherm).is_err());
        let bad_trace = CMatrix::identity(2, 2);
        assert!(QuantumState::new(vec![2], bad_trace).is_err());
        let negative = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.2, 0.0), ZERO, ZERO, C64::new(-0.2, 0.0)],
        );
        assert!(QuantumState::new(vec![2], negative).is_err());
        assert!(QuantumState::new(vec![3], CMatrix::identity(2, 2).unscale(2.0)).is_err());
    }

    #[test]
    fn construction_hermitizes() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.5, 0.0), C64::new(0.1, 1e-11), C64::new(0.1, 0.0), C64::new(0.5, 0.0)],
        );
        let s = QuantumState::new(vec![2], m).unwrap();
        assert_eq!(hermiticity_error(s.matrix()), 0.0);
    }

    #[test]
    fn permute_sites_swaps_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = QuantumState::random_mixed(vec![2], 2, &mut rng);
        let b = QuantumState::random_mixed(vec![2], 2, &mut rng);
        let swapped = a.tensor(&b).permute_sites(&[1, 0]).unwrap();
        assert!(swapped.max_abs_diff(&b.tensor(&a)) < 1e-15);
    }

    #[test]
    fn random_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for rank in 1..=4 {
            let s = QuantumState::random_mixed(vec![2, 2], rank, &mut rng);
            QuantumState::new(s.dims().to_vec(), s.matrix().clone()).unwrap();
        }
    }
}
