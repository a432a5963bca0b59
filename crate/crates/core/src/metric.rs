//! Von Neumann entropy and the quantum Jensen-Shannon divergence.
//!
//! All logarithms are base 2, so `0 ≤ J ≤ 1` with `J = 1` exactly for
//! orthogonal pure states.

use crate::error::{invalid_arg, Result};
use crate::linalg::{hermitian_eigenvalues, spectrum_entropy, CMatrix};
use crate::state::QuantumState;

/// `S(ρ) = -Tr ρ log₂ ρ`, in bits.
pub fn vn_entropy(state: &QuantumState) -> f64 {
    matrix_entropy(state.matrix(), 2.0)
}

pub(crate) fn matrix_entropy(matrix: &CMatrix, base: f64) -> f64 {
    spectrum_entropy(&hermitian_eigenvalues(matrix), base)
}

/// `J(ρ,σ) = S((ρ+σ)/2) - S(ρ)/2 - S(σ)/2`.
pub fn qjsd(rho: &QuantumState, sigma: &QuantumState) -> Result<f64> {
    qjsd_in_base(rho, sigma, 2.0)
}

/// As [`qjsd`] with an arbitrary logarithm base. Only base 2 yields the
/// normalized divergence; other bases exist for diagnostics.
pub fn qjsd_in_base(rho: &QuantumState, sigma: &QuantumState, base: f64) -> Result<f64> {
    if rho.dims() != sigma.dims() {
        return Err(invalid_arg(format!(
            "dimension mismatch: {:?} vs {:?}",
            rho.dims(),
            sigma.dims()
        )));
    }
    let mid = (rho.matrix() + sigma.matrix()).scale(0.5);
    // the sum is commutative, so J(ρ,σ) and J(σ,ρ) agree bit for bit
    let j = matrix_entropy(&mid, base)
        - 0.5 * (matrix_entropy(rho.matrix(), base) + matrix_entropy(sigma.matrix(), base));
    Ok(j.max(0.0))
}

/// `√J(ρ,σ)`, a metric on states.
pub fn qjsd_distance(rho: &QuantumState, sigma: &QuantumState) -> Result<f64> {
    qjsd(rho, sigma).map(f64::sqrt)
}

/// `√J` in an arbitrary logarithm base.
pub fn qjsd_distance_in_base(rho: &QuantumState, sigma: &QuantumState, base: f64) -> Result<f64> {
    qjsd_in_base(rho, sigma, base).map(f64::sqrt)
}
