//! Two-site transverse Ising model and the XXZ chain, solved by exact
//! diagonalization.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::linalg::{CVector, C64};
use crate::state::QuantumState;

/// Largest Hilbert space dimension [`ground_state`] accepts.
pub const MAX_DIMENSION: usize = 1 << 14;

/// Energies closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "open" => Ok(Boundary::Open),
            other => Err(invalid_arg(format!("unknown boundary '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum ModelSpec {
    /// `λ σˣσˣ + J (σˣ₁ + σˣ₂) + ελ (σᶻ₁ + σᶻ₂)`.
    Ising2 { lambda: f64, j: f64, epsilon: f64 },
    /// `J Σₙ (σˣσˣ + σʸσʸ + Δ σᶻσᶻ)` on nearest neighbours.
    Xxz {
        n_sites: usize,
        j: f64,
        delta: f64,
        boundary: Boundary,
    },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Ising2 { lambda, j, epsilon } => {
                if ![lambda, j, epsilon].iter().all(|x| x.is_finite()) {
                    return Err(invalid_arg("Ising couplings must be finite"));
                }
            }
            ModelSpec::Xxz {
                n_sites, j, delta, ..
            } => {
                if n_sites < 2 {
                    return Err(invalid_arg("XXZ chain needs at least 2 sites"));
                }
                if !j.is_finite() || !delta.is_finite() {
                    return Err(invalid_arg("XXZ couplings must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        match *self {
            ModelSpec::Ising2 { .. } => 2,
            ModelSpec::Xxz { n_sites, .. } => n_sites,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroundStateResult {
    pub state: QuantumState,
    /// Real amplitudes with the largest-magnitude entry positive.
    pub amplitudes: Vec<f64>,
    pub energy: f64,
    /// Distance from the ground energy to the next level (0 when degenerate).
    pub degeneracy_gap: f64,
    /// Total `S^z` of the selected sector (XXZ only).
    pub sector_label: Option<f64>,
}

/// 4×4 Ising Hamiltonian in the computational basis.
pub fn build_ising2(lambda: f64, j: f64, epsilon: f64) -> DMatrix<f64> {
    let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let id = DMatrix::<f64>::identity(2, 2);
    x.kronecker(&x).scale(lambda)
        + (x.kronecker(&id) + id.kronecker(&x)).scale(j)
        + (z.kronecker(&id) + id.kronecker(&z)).scale(epsilon * lambda)
}

/// One fixed-magnetization block of the XXZ Hamiltonian.
#[derive(Clone, Debug)]
pub struct SectorBlock {
    /// Number of sites in `|1⟩` (spin down).
    pub down: usize,
    /// Computational basis indices spanning the sector, ascending.
    pub basis: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

impl SectorBlock {
    pub fn total_sz(&self, n_sites: usize) -> f64 {
        0.5 * n_sites as f64 - self.down as f64
    }
}

/// XXZ Hamiltonian stored block-diagonally by total `S^z`.
#[derive(Clone, Debug)]
pub struct XxzHamiltonian {
    pub n_sites: usize,
    pub blocks: Vec<SectorBlock>,
}

impl XxzHamiltonian {
    pub fn dimension(&self) -> usize {
        1 << self.n_sites
    }

    /// Dense assembly of all blocks.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dimension();
        let mut h = DMatrix::zeros(d, d);
        for block in &self.blocks {
            for (a, &ia) in block.basis.iter().enumerate() {
                for (b, &ib) in block.basis.iter().enumerate() {
                    h[(ia, ib)] = block.matrix[(a, b)];
                }
            }
        }
        h
    }
}

/// Nearest-neighbour bonds. A periodic two-site chain has a single bond.
pub fn bonds(n_sites: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..n_sites.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic && n_sites > 2 {
        out.push((n_sites - 1, 0));
    }
    out
}

pub fn build_xxz(n_sites: usize, j: f64, delta: f64, boundary: Boundary) -> Result<XxzHamiltonian> {
    if n_sites < 2 {
        return Err(invalid_arg("XXZ chain needs at least 2 sites"));
    }
    if n_sites > usize::BITS as usize - 2 {
        return Err(Error::Capacity(format!("{n_sites} sites")));
    }
    let bond_list = bonds(n_sites, boundary);
    // site s lives in bit (n_sites - 1 - s), so site 0 is most significant
    let bit = |s: usize| 1usize << (n_sites - 1 - s);
    let dim = 1usize << n_sites;
    let mut blocks = Vec::with_capacity(n_sites + 1);
    for down in 0..=n_sites {
        let basis: Vec<usize> = (0..dim)
            .filter(|&i| i.count_ones() as usize == down)
            .collect();
        let position = |i: usize| basis.binary_search(&i).expect("flip stays in sector");
        let mut matrix = DMatrix::zeros(basis.len(), basis.len());
        for (a, &state) in basis.iter().enumerate() {
            for &(s, t) in &bond_list {
                let up_s = state & bit(s) == 0;
                let up_t = state & bit(t) == 0;
                let zz = if up_s == up_t { 1.0 } else { -1.0 };
                matrix[(a, a)] += j * delta * zz;
                if up_s != up_t {
                    // σˣσˣ + σʸσʸ = 2(σ⁺σ⁻ + σ⁻σ⁺) swaps antiparallel spins
                    let flipped = state ^ bit(s) ^ bit(t);
                    matrix[(position(flipped), a)] += 2.0 * j;
                }
            }
        }
        blocks.push(SectorBlock {
            down,
            basis,
            matrix,
        });
    }
    Ok(XxzHamiltonian { n_sites, blocks })
}

struct Candidate {
    energy: f64,
    next: f64,
    sz: Option<f64>,
    vector: Vec<f64>,
}

fn lowest_two(matrix: &DMatrix<f64>) -> (f64, f64, Vec<f64>) {
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let e0 = eig.eigenvalues[order[0]];
    let e1 = order
        .get(1)
        .map(|&i| eig.eigenvalues[i])
        .unwrap_or(f64::INFINITY);
    let v = eig.eigenvectors.column(order[0]).iter().copied().collect();
    (e0, e1, v)
}

/// Flips the sign so the largest-magnitude amplitude (first on ties) is positive.
fn fix_sign(mut v: Vec<f64>) -> Vec<f64> {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// Ground state by exact diagonalization.
///
/// Across XXZ sectors the minimum is taken with energies within
/// [`DEGENERACY_TOL`] treated as equal and the largest total `S^z` preferred,
/// so the ferromagnetic phase resolves to `|00…0⟩`.
pub fn ground_state(spec: &ModelSpec) -> Result<GroundStateResult> {
    spec.validate()?;
    let n = spec.n_sites();
    if n >= usize::BITS as usize - 2 || (1usize << n) > MAX_DIMENSION {
        return Err(Error::Capacity(format!(
            "{n} sites exceed the dimension limit {MAX_DIMENSION}"
        )));
    }
    let dim = 1usize << n;
    let candidates: Vec<Candidate> = match *spec {
        ModelSpec::Ising2 { lambda, j, epsilon } => {
            let (energy, next, vector) = lowest_two(&build_ising2(lambda, j, epsilon));
            vec![Candidate {
                energy,
                next,
                sz: None,
                vector,
            }]
        }
        ModelSpec::Xxz {
            n_sites,
            j,
            delta,
            boundary,
        } => {
            let h = build_xxz(n_sites, j, delta, boundary)?;
            // blocks are ordered by decreasing S^z
            h.blocks
                .iter()
                .map(|block| {
                    let (energy, next, local) = lowest_two(&block.matrix);
                    let mut vector = vec![0.0; dim];
                    for (a, &i) in block.basis.iter().enumerate() {
                        vector[i] = local[a];
                    }
                    Candidate {
                        energy,
                        next,
                        sz: Some(block.total_sz(n_sites)),
                        vector,
                    }
                })
                .collect()
        }
    };

    let e_min = candidates
        .iter()
        .map(|c| c.energy)
        .fold(f64::INFINITY, f64::min);
    let chosen = candidates
        .iter()
        .position(|c| c.energy <= e_min + DEGENERACY_TOL)
        .expect("at least one sector");
    let energy = candidates[chosen].energy;
    let mut levels: Vec<f64> = Vec::with_capacity(2 * candidates.len());
    for (i, c) in candidates.iter().enumerate() {
        if i != chosen {
            levels.push(c.energy);
        }
        levels.push(c.next);
    }
    let next_level = levels.into_iter().fold(f64::INFINITY, f64::min);
    let degeneracy_gap = if next_level.is_finite() {
        (next_level - energy).max(0.0)
    } else {
        f64::INFINITY
    };

    let amplitudes = fix_sign(candidates[chosen].vector.clone());
    let psi = CVector::from_iterator(dim, amplitudes.iter().map(|&a| C64::new(a, 0.0)));
    let state = QuantumState::from_pure(vec![2; n], &psi)?;
    Ok(GroundStateResult {
        state,
        amplitudes,
        energy,
        degeneracy_gap,
        sector_label: candidates[chosen].sz,
    })
}
