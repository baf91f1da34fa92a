//! Thermal states, reduced density matrices, free energies, and relative entropies.

use nalgebra::{DMatrix, SymmetricEigen};

use super::manybody::{ladder, ManyBodyOperator, OccupationBasis};
use crate::error::{precondition, Error, Result};
use crate::measures::PairTensor;
use crate::stats::logsumexp;

/// `Γ = e^{−H/T}/Z` stored through the eigendecomposition of `H`, with
/// probabilities kept as logarithms so low temperatures do not underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    pub energies: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub log_probs: Vec<f64>,
    pub log_z: f64,
    pub t: f64,
}

impl ThermalState {
    pub fn probabilities(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    pub fn density_matrix(&self) -> DMatrix<f64> {
        let p = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.probabilities()));
        &self.eigenvectors * p * self.eigenvectors.transpose()
    }

    /// `log Γ = V diag(log p) Vᵀ`.
    pub fn log_density_matrix(&self) -> DMatrix<f64> {
        let l = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.log_probs.clone()));
        &self.eigenvectors * l * self.eigenvectors.transpose()
    }

    /// `−Σ p log p`.
    pub fn entropy(&self) -> f64 {
        -self.log_probs.iter().map(|l| if l.is_finite() { l.exp() * l } else { 0.0 }).sum::<f64>()
    }
}

pub fn thermal_state(h: &ManyBodyOperator, t: f64) -> Result<ThermalState> {
    if !(t > 0.0) {
        return Err(precondition(format!("temperature must be positive, got {t}")));
    }
    let eig = SymmetricEigen::new(h.matrix.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(h.matrix.nrows(), energies.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    let scaled: Vec<f64> = energies.iter().map(|e| -e / t).collect();
    let log_z = logsumexp(&scaled);
    let log_probs = scaled.iter().map(|s| s - log_z).collect();
    Ok(ThermalState { energies, eigenvectors, log_probs, log_z, t })
}

/// `Tr[A Γ]` where `A` is a product of ladder operators, for a dense `Γ`.
fn ladder_expectation(gamma: &DMatrix<f64>, ob: &OccupationBasis, creators: &[usize], annihilators: &[usize]) -> f64 {
    let mut total = 0.0;
    for (col, state) in ob.states.iter().enumerate() {
        if let Some((out, amp)) = ladder(state, creators, annihilators) {
            if let Some(row) = ob.index_of(&out) {
                total += amp * gamma[(col, row)];
            }
        }
    }
    total
}

/// Reduced density matrix of order `k ∈ {1, 2}` normalized to trace `C(N, k)`.
///
/// `Γ^(1)_{ij} = Tr[a†_j a_i Γ]`; `Γ^(2)_{(ij),(kl)} = ½ Tr[a†_k a†_l a_j a_i Γ]`
/// with pair index `(i, j) ↦ i·d + j`.
pub fn reduced_dm(gamma: &DMatrix<f64>, ob: &OccupationBasis, k: usize) -> Result<DMatrix<f64>> {
    if k == 0 || k > 2 || k > ob.n {
        return Err(precondition(format!("reduced density matrix of order {k} for N = {}", ob.n)));
    }
    let d = ob.d;
    Ok(match k {
        1 => DMatrix::from_fn(d, d, |i, j| ladder_expectation(gamma, ob, &[j], &[i])),
        _ => DMatrix::from_fn(d * d, d * d, |a, b| {
            let (i, j) = (a / d, a % d);
            let (kk, l) = (b / d, b % d);
            0.5 * ladder_expectation(gamma, ob, &[kk, l], &[j, i])
        }),
    })
}

/// `Tr[w Γ^(2)] = Σ W[k,l,i,j] Γ^(2)_{(ij),(kl)}`.
pub fn pair_interaction_expectation(w: &PairTensor, gamma2: &DMatrix<f64>) -> f64 {
    let d = w.d;
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    total += w.get(k, l, i, j) * gamma2[(i * d + j, k * d + l)];
                }
            }
        }
    }
    total
}

const EIGEN_FLOOR: f64 = 1e-300;

fn sym_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new((m + m.transpose()) * 0.5)
}

/// `Tr[Γ(log Γ − log Ξ)]` for dense density matrices.
pub fn quantum_relative_entropy(gamma: &DMatrix<f64>, xi: &DMatrix<f64>) -> Result<f64> {
    if gamma.shape() != xi.shape() {
        return Err(precondition("states act on different spaces"));
    }
    let eg = sym_eigen(gamma);
    let ex = sym_eigen(xi);
    let gamma_log_gamma: f64 =
        eg.eigenvalues.iter().map(|&p| if p > EIGEN_FLOOR { p * p.ln() } else { 0.0 }).sum();
    let mut cross = 0.0;
    for (c, &q) in ex.eigenvalues.iter().enumerate() {
        let v = ex.eigenvectors.column(c);
        let weight = (gamma * v).dot(&v);
        if q <= EIGEN_FLOOR {
            if weight > 1e-14 {
                return Err(Error::RankDeficient);
            }
            continue;
        }
        cross += weight * q.ln();
    }
    Ok(gamma_log_gamma - cross)
}

/// Relative entropy between two thermal states on the same sector, computed
/// from their logarithms directly.
pub fn thermal_relative_entropy(gamma: &ThermalState, xi: &ThermalState) -> f64 {
    let log_xi = xi.log_density_matrix();
    let mut cross = 0.0;
    for (c, lp) in gamma.log_probs.iter().enumerate() {
        let p = lp.exp();
        if p == 0.0 {
            continue;
        }
        let v = gamma.eigenvectors.column(c);
        cross += p * (&log_xi * v).dot(&v);
    }
    -gamma.entropy() - cross
}

/// `F[Γ] = Tr[HΓ] + T Tr[Γ log Γ]` for a dense state.
pub fn free_energy(gamma: &DMatrix<f64>, h: &DMatrix<f64>, t: f64) -> f64 {
    let energy = (h * gamma).trace();
    let eg = sym_eigen(gamma);
    let neg_entropy: f64 = eg.eigenvalues.iter().map(|&p| if p > EIGEN_FLOOR { p * p.ln() } else { 0.0 }).sum();
    energy + t * neg_entropy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::manybody::build_interacting_hamiltonian;

    #[test]
    fn commuting_states_reduce_to_kl() {
        let p: [f64; 3] = [0.5, 0.3, 0.2];
        let q: [f64; 3] = [0.2, 0.2, 0.6];
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&p));
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&q));
        let kl: f64 = p.iter().zip(&q).map(|(x, y)| x * (x / y).ln()).sum();
        assert!((quantum_relative_entropy(&a, &b).unwrap() - kl).abs() < 1e-14);
        assert!(quantum_relative_entropy(&a, &a).unwrap().abs() < 1e-14);
        let c = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[0.5, 0.5, 0.0]));
        assert!(matches!(quantum_relative_entropy(&a, &c), Err(Error::RankDeficient)));
    }

    #[test]
    fn gibbs_state_free_energy() {
        let w = PairTensor { d: 2, values: vec![0.0; 16], symmetry_residual: 0.0 };
        let h = build_interacting_hamiltonian(&[1.0, 2.0], &w, 4, 0.0).unwrap();
        let st = thermal_state(&h, 1.5).unwrap();
        let f = free_energy(&st.density_matrix(), &h.matrix, 1.5);
        assert!((f + 1.5 * st.log_z).abs() < 1e-12);
        let g1 = reduced_dm(&st.density_matrix(), &h.occupation_basis, 1).unwrap();
        assert!((g1.trace() - 4.0).abs() < 1e-12);
        let g2 = reduced_dm(&st.density_matrix(), &h.occupation_basis, 2).unwrap();
        assert!((g2.trace() - 6.0).abs() < 1e-12);
    }
}
