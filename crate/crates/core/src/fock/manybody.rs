//! Interacting bosons in a fixed-N occupation-number basis.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{precondition, Error, Result};
use crate::measures::{GridConvolver, InteractionPotential, PairTensor};
use crate::spectral::SpectralBasis;

/// All occupation sequences `(n_1, …, n_d)` with `Σ n_j = N`, in
/// lexicographically decreasing order of `n_1, n_2, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationBasis {
    pub d: usize,
    pub n: usize,
    pub states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl OccupationBasis {
    pub fn new(d: usize, n: usize) -> Self {
        let mut states = Vec::new();
        let mut cur = vec![0u32; d];
        fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if pos + 1 == cur.len() {
                cur[pos] = left;
                out.push(cur.clone());
                return;
            }
            for v in (0..=left).rev() {
                cur[pos] = v;
                rec(pos + 1, left - v, cur, out);
            }
        }
        if d > 0 {
            rec(0, n as u32, &mut cur, &mut states);
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { d, n, states, index }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, state: &[u32]) -> Option<usize> {
        self.index.get(state).copied()
    }
}

/// `a_i`: returns `√n_i` and lowers `n_i`.
fn annihilate(state: &mut [u32], i: usize) -> Option<f64> {
    if state[i] == 0 {
        return None;
    }
    let amp = (state[i] as f64).sqrt();
    state[i] -= 1;
    Some(amp)
}

fn create(state: &mut [u32], i: usize) -> f64 {
    state[i] += 1;
    (state[i] as f64).sqrt()
}

/// Apply the listed annihilators, then the listed creators, to a basis state.
/// Operators within each group commute, so their order is immaterial.
pub(crate) fn ladder(state: &[u32], creators: &[usize], annihilators: &[usize]) -> Option<(Vec<u32>, f64)> {
    let mut s = state.to_vec();
    let mut amp = 1.0;
    for &a in annihilators {
        amp *= annihilate(&mut s, a)?;
    }
    for &c in creators {
        amp *= create(&mut s, c);
    }
    Some((s, amp))
}

pub const MAX_DENSE_DIM: usize = 20_000;

/// Dense Hamiltonian on the symmetric `N`-particle sector.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyBodyOperator {
    pub occupation_basis: OccupationBasis,
    pub matrix: DMatrix<f64>,
    pub n: usize,
    pub d: usize,
    pub g: f64,
    pub hermitian_residual: f64,
}

/// Mode integrals of `w` on the first `d_low` eigenmodes.
pub fn wmatrix_elements(basis: &SpectralBasis, d_low: usize, potential: &InteractionPotential) -> Result<PairTensor> {
    if d_low == 0 || d_low > basis.n_modes() {
        return Err(precondition(format!("{d_low} modes requested from a {}-mode basis", basis.n_modes())));
    }
    let conv = GridConvolver::new(basis, d_low, potential, 1)?;
    let t = PairTensor::compute(&conv);
    if t.symmetry_residual > 1e-8 {
        return Err(Error::UnderResolved(format!("pair tensor symmetry residual {:.3e}", t.symmetry_residual)));
    }
    Ok(t)
}

/// `H = Σ_j λ_j n_j + (g/N) · ½ Σ W[i,j,k,l] a†_i a†_j a_l a_k`.
pub fn build_interacting_hamiltonian(rates: &[f64], w: &PairTensor, n: usize, g: f64) -> Result<ManyBodyOperator> {
    let d = rates.len();
    if w.d != d {
        return Err(precondition(format!("pair tensor has {} modes, rates {d}", w.d)));
    }
    if n == 0 {
        return Err(precondition("particle number must be positive"));
    }
    let dim = binomial(n + d - 1, n);
    if dim > MAX_DENSE_DIM as f64 {
        return Err(precondition(format!("sector dimension {dim} exceeds {MAX_DENSE_DIM}")));
    }
    let ob = OccupationBasis::new(d, n);
    let dim = ob.dim();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let coupling = 0.5 * g / n as f64;
    for (col, state) in ob.states.iter().enumerate() {
        h[(col, col)] += state.iter().zip(rates).map(|(&c, l)| c as f64 * l).sum::<f64>();
        if g == 0.0 {
            continue;
        }
        for k in 0..d {
            for l in 0..d {
                let Some((mid, amp_a)) = ladder(state, &[], &[l, k]) else { continue };
                for i in 0..d {
                    for j in 0..d {
                        let wv = w.get(i, j, k, l);
                        if wv == 0.0 {
                            continue;
                        }
                        let (out, amp_c) = ladder(&mid, &[i, j], &[]).expect("creation always succeeds");
                        let row = ob.index_of(&out).expect("particle number is conserved");
                        h[(row, col)] += coupling * wv * amp_a * amp_c;
                    }
                }
            }
        }
    }
    let residual = (&h - h.transpose()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if residual > 1e-10 * h.iter().fold(1.0f64, |m, v| m.max(v.abs())) {
        return Err(Error::Internal(format!("Hamiltonian asymmetry {residual:.3e}")));
    }
    let hs = (&h + h.transpose()) * 0.5;
    Ok(ManyBodyOperator { occupation_basis: ob, matrix: hs, n, d, g, hermitian_residual: residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_dimension_is_binomial() {
        for (d, n) in [(1, 5), (2, 3), (3, 4), (4, 6)] {
            assert_eq!(OccupationBasis::new(d, n).dim() as f64, binomial(n + d - 1, n));
        }
    }

    #[test]
    fn free_hamiltonian_is_diagonal() {
        let w = PairTensor { d: 2, values: vec![0.3; 16], symmetry_residual: 0.0 };
        let h = build_interacting_hamiltonian(&[1.0, 2.5], &w, 3, 0.0).unwrap();
        for (i, s) in h.occupation_basis.states.iter().enumerate() {
            assert_eq!(h.matrix[(i, i)], s[0] as f64 + 2.5 * s[1] as f64);
        }
        assert_eq!(h.matrix.iter().filter(|v| **v != 0.0).count(), 4);
    }
}
