//! Increment bijection between bounded compositions of `N` and `N + 1`.
//!
//! For `g` with `Σ g_j = 2N + 1`, `S_N = {n : 0 ≤ n_j ≤ g_j, Σ n_j = N}` and
//! `S_{N+1}` have equal size. A bijection `n ↦ n + e_j` is found as a perfect
//! matching in the bipartite increment graph.

use petgraph::algo::maximum_matching;
use petgraph::graph::{NodeIndex, UnGraph};
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};

pub const MAX_SUPPORT: usize = 12;
pub const MAX_N: usize = 8;

/// All `n` with `0 ≤ n_j ≤ bound_j` and `Σ n_j = total`, lexicographic.
pub fn bounded_compositions(bound: &[u32], total: u32) -> Vec<Vec<u32>> {
    fn rec(pos: usize, left: u32, bound: &[u32], suffix: &[u32], cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == bound.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let max = bound[pos].min(left);
        let min = left.saturating_sub(suffix[pos + 1]);
        for v in min..=max {
            cur.push(v);
            rec(pos + 1, left - v, bound, suffix, cur, out);
            cur.pop();
        }
    }
    let mut suffix = vec![0u32; bound.len() + 1];
    for i in (0..bound.len()).rev() {
        suffix[i] = suffix[i + 1] + bound[i];
    }
    let mut out = Vec::new();
    rec(0, total, bound, &suffix, &mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CannonMatching {
    pub g: Vec<u32>,
    pub n: usize,
    pub domain: Vec<Vec<u32>>,
    pub codomain: Vec<Vec<u32>>,
    /// `image[i]` indexes `codomain`.
    pub image: Vec<usize>,
    /// Coordinate incremented for `domain[i]`.
    pub coordinate: Vec<usize>,
}

impl CannonMatching {
    /// Index pairs `(i, image[i])`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.image.iter().enumerate().map(|(i, &j)| (i, j)).collect()
    }
}

pub fn cannon_match(g: &[u32], n: usize) -> Result<CannonMatching> {
    let total: u64 = g.iter().map(|&x| x as u64).sum();
    if total != 2 * n as u64 + 1 {
        return Err(precondition(format!("Σ g = {total} must equal 2N + 1 = {}", 2 * n + 1)));
    }
    let support = g.iter().filter(|&&x| x > 0).count();
    if support > MAX_SUPPORT || n > MAX_N {
        return Err(precondition(format!("support {support} or N = {n} beyond the enumeration guard")));
    }
    let domain = bounded_compositions(g, n as u32);
    let codomain = bounded_compositions(g, n as u32 + 1);
    let index: std::collections::HashMap<&[u32], usize> =
        codomain.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let n_dom = domain.len();
    let mut graph = UnGraph::<(), ()>::with_capacity(n_dom + codomain.len(), n_dom * g.len());
    for _ in 0..n_dom + codomain.len() {
        graph.add_node(());
    }
    for (i, s) in domain.iter().enumerate() {
        for j in (0..g.len()).filter(|&j| s[j] < g[j]) {
            let mut t = s.clone();
            t[j] += 1;
            graph.add_edge(NodeIndex::new(i), NodeIndex::new(n_dom + index[t.as_slice()]), ());
        }
    }
    let matching = maximum_matching(&graph);
    if n_dom != codomain.len() || !matching.is_perfect() {
        return Err(Error::Internal(format!(
            "no perfect increment matching ({} vs {} states)",
            n_dom,
            codomain.len()
        )));
    }
    let image: Vec<usize> =
        (0..n_dom).map(|i| matching.mate(NodeIndex::new(i)).expect("perfect matching").index() - n_dom).collect();
    let coordinate = domain
        .iter()
        .zip(&image)
        .map(|(s, &i)| (0..g.len()).find(|&j| codomain[i][j] == s[j] + 1).unwrap())
        .collect();
    Ok(CannonMatching { g: g.to_vec(), n, domain, codomain, image, coordinate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_coordinate() {
        let m = cannon_match(&[7], 3).unwrap();
        assert_eq!(m.domain, vec![vec![3]]);
        assert_eq!(m.codomain[m.image[0]], vec![4]);
    }

    #[test]
    fn all_ones_is_a_bijection() {
        let m = cannon_match(&[1; 7], 3).unwrap();
        assert_eq!(m.domain.len(), 35);
        let mut seen = m.image.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 35);
    }

    #[test]
    fn rejects_inadmissible_vectors() {
        assert!(cannon_match(&[1, 1], 1).is_err());
    }
}
