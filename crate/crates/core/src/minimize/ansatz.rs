use crate::error::{invalid_arg, Result};
use crate::linalg::{outer, CMatrix, CVector};
use crate::state::{permutation_map, QuantumState};

const NORMALIZATION_TOL: f64 = 1e-12;

/// `Σ_k p_k ⊗_g |ψ_{k,g}⟩⟨ψ_{k,g}|` over a partition of the sites into groups.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableAnsatz {
    /// Site indices of each factor, ascending within a group.
    pub groups: Vec<Vec<usize>>,
    pub site_dims: Vec<usize>,
    pub weights: Vec<f64>,
    /// `factors[k][g]` is the pure state of component `k` on group `g`.
    pub factors: Vec<Vec<CVector>>,
}

impl SeparableAnsatz {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn group_dims(&self) -> Vec<usize> {
        self.groups
            .iter()
            .map(|g| g.iter().map(|&s| self.site_dims[s]).product())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        validate_partition(&self.groups, self.site_dims.len())?;
        if self.weights.iter().any(|&w| w < 0.0) {
            return Err(invalid_arg("negative ansatz weight"));
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > NORMALIZATION_TOL {
            return Err(invalid_arg("ansatz weights do not sum to 1"));
        }
        if self.factors.len() != self.weights.len() {
            return Err(invalid_arg("one factor list per component required"));
        }
        let dims = self.group_dims();
        for component in &self.factors {
            if component.len() != dims.len() {
                return Err(invalid_arg("one factor per group required"));
            }
            for (v, &d) in component.iter().zip(&dims) {
                if v.len() != d {
                    return Err(invalid_arg("factor dimension does not match its group"));
                }
                if (v.norm() - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(invalid_arg("ansatz factor is not normalized"));
                }
            }
        }
        Ok(())
    }

    /// The mixed state this ansatz describes, in the original site order.
    pub fn realize(&self) -> Result<QuantumState> {
        self.validate()?;
        let order: Vec<usize> = self.groups.iter().flatten().copied().collect();
        let permuted_dims: Vec<usize> = order.iter().map(|&s| self.site_dims[s]).collect();
        let d: usize = permuted_dims.iter().product();
        let mut grouped = CMatrix::zeros(d, d);
        for (w, component) in self.weights.iter().zip(&self.factors) {
            let product = component
                .iter()
                .skip(1)
                .fold(component[0].clone(), |acc, v| acc.kronecker(v));
            grouped += outer(&product).scale(*w);
        }
        // grouped index i corresponds to original index map[i]
        let map = permutation_map(&self.site_dims, &order)?;
        let mut matrix = CMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                matrix[(map[r], map[c])] = grouped[(r, c)];
            }
        }
        QuantumState::trusted(self.site_dims.clone(), matrix)
    }
}

pub(crate) fn validate_partition(groups: &[Vec<usize>], n_sites: usize) -> Result<()> {
    let mut seen = vec![false; n_sites];
    for g in groups {
        if g.is_empty() {
            return Err(invalid_arg("partition contains an empty group"));
        }
        for &s in g {
            if s >= n_sites {
                return Err(invalid_arg(format!("site {s} out of range for {n_sites} sites")));
            }
            if seen[s] {
                return Err(invalid_arg(format!("site {s} appears twice in the partition")));
            }
            seen[s] = true;
        }
    }
    if !seen.iter().all(|&x| x) {
        return Err(invalid_arg("partition does not cover every site"));
    }
    Ok(())
}
