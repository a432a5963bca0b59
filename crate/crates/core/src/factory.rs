//! Named states and reference product bases.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{invalid_arg, Error, Result};
use crate::linalg::{kron, max_abs, CMatrix, CVector, C64};
use crate::state::QuantumState;

const ORTHONORMALITY_TOL: f64 = 1e-12;

/// Per-site reference basis. Column `k` of `sites[n]` is `|b_{k,n}⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSpec {
    sites: Vec<CMatrix>,
}

impl BasisSpec {
    pub fn new(sites: Vec<CMatrix>) -> Result<Self> {
        if sites.is_empty() {
            return Err(invalid_arg("basis needs at least one site"));
        }
        for (n, b) in sites.iter().enumerate() {
            if b.nrows() != b.ncols() || b.nrows() == 0 {
                return Err(invalid_arg(format!(
                    "site {n}: basis must list as many vectors as the site dimension"
                )));
            }
            let gram = b.adjoint() * b - CMatrix::identity(b.nrows(), b.ncols());
            if max_abs(&gram) > ORTHONORMALITY_TOL {
                return Err(invalid_arg(format!("site {n}: basis vectors are not orthonormal")));
            }
        }
        Ok(Self { sites })
    }

    /// `{|0⟩, |1⟩, …}` on every site.
    pub fn computational(dims: &[usize]) -> Self {
        Self {
            sites: dims.iter().map(|&d| CMatrix::identity(d, d)).collect(),
        }
    }

    pub fn site_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|b| b.nrows()).collect()
    }

    pub fn site(&self, n: usize) -> &CMatrix {
        &self.sites[n]
    }

    pub fn is_computational(&self) -> bool {
        self.sites
            .iter()
            .all(|b| max_abs(&(b - CMatrix::identity(b.nrows(), b.ncols()))) == 0.0)
    }

    /// The bases of the listed sites, in order.
    pub fn restrict(&self, sites: &[usize]) -> Result<Self> {
        if sites.iter().any(|&s| s >= self.sites.len()) {
            return Err(invalid_arg("site index out of range for basis"));
        }
        Ok(Self {
            sites: sites.iter().map(|&s| self.sites[s].clone()).collect(),
        })
    }

    /// Product unitary whose columns are the product basis vectors.
    pub fn product_unitary(&self) -> CMatrix {
        self.sites
            .iter()
            .skip(1)
            .fold(self.sites[0].clone(), |acc, b| kron(&acc, b))
    }

    /// Basis rotated site-wise: `|b_{k,n}⟩ → U_n |b_{k,n}⟩`.
    pub fn rotated(&self, unitaries: &[CMatrix]) -> Result<Self> {
        if unitaries.len() != self.sites.len() {
            return Err(invalid_arg("one unitary per site required"));
        }
        Self::new(
            self.sites
                .iter()
                .zip(unitaries)
                .map(|(b, u)| u * b)
                .collect(),
        )
    }

    pub(crate) fn check_dims(&self, dims: &[usize]) -> Result<()> {
        if self.site_dims() != dims {
            return Err(invalid_arg(format!(
                "basis dims {:?} do not match state dims {dims:?}",
                self.site_dims()
            )));
        }
        Ok(())
    }
}

fn real_ket(amps: &[f64]) -> CVector {
    CVector::from_iterator(amps.len(), amps.iter().map(|&a| C64::new(a, 0.0)))
}

fn pure(amps: &[f64], sites: usize) -> QuantumState {
    QuantumState::from_pure(vec![2; sites], &real_ket(amps))
        .expect("factory amplitudes are normalized")
}

/// `cos φ |000⟩ + sin φ |111⟩` amplitudes.
pub fn ghz_vector(phi: f64) -> CVector {
    let mut v = CVector::zeros(8);
    v[0] = C64::new(phi.cos(), 0.0);
    v[7] = C64::new(phi.sin(), 0.0);
    v
}

pub fn ghz_state(phi: f64) -> QuantumState {
    QuantumState::from_pure(vec![2, 2, 2], &ghz_vector(phi)).expect("GHZ amplitudes are normalized")
}

/// `(1-μ)/8 · 𝟙 + μ |GHZ(φ)⟩⟨GHZ(φ)|`.
pub fn werner_ghz(mu: f64, phi: f64) -> Result<QuantumState> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(invalid_arg(format!("mixing weight mu = {mu} outside [0, 1]")));
    }
    let noise = CMatrix::identity(8, 8).scale((1.0 - mu) / 8.0);
    let matrix = noise + ghz_state(phi).into_matrix().scale(mu);
    QuantumState::new(vec![2, 2, 2], matrix)
}

/// `sin θ cos φ |100⟩ + sin θ sin φ |010⟩ + cos θ |001⟩` amplitudes.
pub fn w_vector(theta: f64, phi: f64) -> CVector {
    let mut v = CVector::zeros(8);
    v[4] = C64::new(theta.sin() * phi.cos(), 0.0);
    v[2] = C64::new(theta.sin() * phi.sin(), 0.0);
    v[1] = C64::new(theta.cos(), 0.0);
    v
}

pub fn w_state(theta: f64, phi: f64) -> QuantumState {
    QuantumState::from_pure(vec![2, 2, 2], &w_vector(theta, phi)).expect("W amplitudes are normalized")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellSign {
    Plus,
    Minus,
}

impl TryFrom<i32> for BellSign {
    type Error = Error;

    fn try_from(sign: i32) -> Result<Self> {
        match sign {
            1 => Ok(BellSign::Plus),
            -1 => Ok(BellSign::Minus),
            other => Err(invalid_arg(format!("Bell sign must be +1 or -1, got {other}"))),
        }
    }
}

/// `(|00⟩ ± |11⟩)/√2`.
pub fn bell_state(sign: BellSign) -> QuantumState {
    let s = match sign {
        BellSign::Plus => 1.0,
        BellSign::Minus => -1.0,
    };
    pure(&[FRAC_1_SQRT_2, 0.0, 0.0, s * FRAC_1_SQRT_2], 2)
}

/// `|−⟩⟨−|^{⊗N}` with `|−⟩ = (|0⟩ - |1⟩)/√2`.
pub fn product_minus_state(n_sites: usize) -> Result<QuantumState> {
    if n_sites == 0 {
        return Err(invalid_arg("need at least one site"));
    }
    let minus = pure(&[FRAC_1_SQRT_2, -FRAC_1_SQRT_2], 1);
    Ok((1..n_sites).fold(minus.clone(), |acc, _| acc.tensor(&minus)))
}

/// Rescales a state vector so its first nonzero amplitude is real and nonnegative.
pub fn canonical_phase(mut psi: CVector) -> CVector {
    if let Some(first) = psi.iter().find(|z| z.norm() > 0.0).copied() {
        let phase = first.conj() / first.norm();
        psi *= phase;
    }
    psi
}
