//! Dense complex linear algebra used throughout the crate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector of `eigenvalues[i]`.
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn of(matrix: &CMatrix) -> Self {
        let eig = SymmetricEigen::new(matrix.clone());
        let n = matrix.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Self {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply_function(|x| x)
    }

    /// `V f(Λ) V†`.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (c, &lambda) in self.eigenvalues.iter().enumerate() {
            let s = f(lambda);
            for r in 0..n {
                scaled[(r, c)] *= s;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }
}

/// Eigenvalues only, unsorted.
pub fn hermitian_eigenvalues(matrix: &CMatrix) -> Vec<f64> {
    matrix.symmetric_eigenvalues().iter().copied().collect()
}

pub fn hermitize(matrix: &CMatrix) -> CMatrix {
    (matrix + matrix.adjoint()).scale(0.5)
}

pub fn max_abs(matrix: &CMatrix) -> f64 {
    matrix.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_error(matrix: &CMatrix) -> f64 {
    max_abs(&(matrix - matrix.adjoint()))
}

pub fn real_trace(matrix: &CMatrix) -> f64 {
    matrix.trace().re
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// `|ψ⟩⟨ψ|` for an arbitrary (not necessarily normalized) vector.
pub fn outer(psi: &CVector) -> CMatrix {
    psi * psi.adjoint()
}

/// Orthonormal basis (as columns) for the numerical range of a positive
/// semidefinite matrix. Directions with weight at or below `tol` are dropped.
///
/// A pivoted Cholesky factorization finds the range in `O(n² r)`, which keeps
/// this cheap for large, low-rank reduced states; the compressed `r × r`
/// matrix is then diagonalized to discard residual near-null directions.
pub fn support_basis(matrix: &CMatrix, tol: f64) -> CMatrix {
    let n = matrix.nrows();
    let mut diag: Vec<f64> = (0..n).map(|i| matrix[(i, i)].re).collect();
    let mut columns: Vec<CVector> = Vec::new();
    let mut used = vec![false; n];
    loop {
        let pivot = (0..n)
            .filter(|&i| !used[i])
            .max_by(|&a, &b| diag[a].total_cmp(&diag[b]));
        let Some(p) = pivot else { break };
        if diag[p] <= tol {
            break;
        }
        used[p] = true;
        let scale = diag[p].sqrt();
        let mut col = matrix.column(p).into_owned();
        for prev in &columns {
            let coeff = prev[p].conj();
            col.axpy(-coeff, prev, ONE);
        }
        col /= C64::new(scale, 0.0);
        for i in 0..n {
            diag[i] -= col[i].norm_sqr();
        }
        columns.push(col);
    }
    if columns.is_empty() {
        return CMatrix::zeros(n, 0);
    }
    let factor = CMatrix::from_columns(&columns);
    let q = factor.qr().q();
    let compressed = hermitize(&(q.adjoint() * matrix * &q));
    let spec = SpectralDecomposition::of(&compressed);
    let keep: Vec<usize> = (0..spec.eigenvalues.len())
        .rev()
        .filter(|&i| spec.eigenvalues[i] > tol)
        .collect();
    let rotation = CMatrix::from_fn(q.ncols(), keep.len(), |r, c| {
        spec.eigenvectors[(r, keep[c])]
    });
    q * rotation
}

/// Entropy `-Σ p log_b p` of a spectrum. Negative rounding noise is clipped
/// to zero and the clipped spectrum renormalized.
pub fn spectrum_entropy(eigenvalues: &[f64], base: f64) -> f64 {
    let clipped: Vec<f64> = eigenvalues.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let ln_base = base.ln();
    clipped
        .iter()
        .map(|&x| x / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln() / ln_base)
        .sum()
}

/// Row-major strides for a tensor product with the first factor most significant.
pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}
