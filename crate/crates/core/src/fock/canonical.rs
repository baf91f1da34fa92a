//! Free bosons at fixed particle number via the partition-function recursion.

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};
use crate::stats::{linear_fit, logsumexp};

pub const MAX_PARTICLES: usize = 1_000_000;

fn check(rates: &[f64], n: usize, t: f64) -> Result<()> {
    if n > MAX_PARTICLES {
        return Err(precondition(format!("particle number {n} exceeds the {MAX_PARTICLES} limit")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(precondition(format!("temperature must be positive, got {t}")));
    }
    if rates.iter().any(|l| !l.is_finite()) {
        return Err(precondition("rates must be finite"));
    }
    Ok(())
}

/// `log Z_n` for `n = 0..=N` from `Z_n = (1/n) Σ_{k=1}^n Z_1(k/T) Z_{n−k}`,
/// where `Z_1(k/T) = Σ_j e^{−kλ_j/T}`. An empty mode set gives `Z_0 = 1`
/// and `Z_n = 0` otherwise.
pub fn free_canonical_partition(rates: &[f64], n: usize, t: f64) -> Result<Vec<f64>> {
    check(rates, n, t)?;
    let log_z1: Vec<f64> = (0..=n)
        .map(|k| {
            let terms: Vec<f64> = rates.iter().map(|l| -(k as f64) * l / t).collect();
            logsumexp(&terms)
        })
        .collect();
    let mut log_z = Vec::with_capacity(n + 1);
    log_z.push(0.0);
    let mut terms = Vec::with_capacity(n);
    for m in 1..=n {
        terms.clear();
        terms.extend((1..=m).map(|k| log_z1[k] + log_z[m - k]));
        log_z.push(logsumexp(&terms) - (m as f64).ln());
    }
    Ok(log_z)
}

/// Free canonical ensemble of `N` bosons with its diagonal one- and two-body data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalEnsembleData {
    pub rates: Vec<f64>,
    pub n: usize,
    pub t: f64,
    /// `log Z_n` for `n = 0..=N`.
    pub log_z: Vec<f64>,
    /// `⟨n_j⟩`.
    pub occupations: Vec<f64>,
    /// `⟨n_j n_k⟩`, including `⟨n_j²⟩` on the diagonal.
    pub pair_occupations: Vec<Vec<f64>>,
}

impl CanonicalEnsembleData {
    /// `F = −T log Z_N`.
    pub fn free_energy(&self) -> f64 {
        -self.t * self.log_z[self.n]
    }
}

/// `⟨n_j⟩ = Σ_{k≥1} e^{−kλ_j/T} Z_{N−k}/Z_N` from a partition table covering `N`.
pub fn occupations_from_table(rates: &[f64], log_z: &[f64], n: usize, t: f64) -> Vec<f64> {
    rates
        .iter()
        .map(|l| {
            let terms: Vec<f64> = (1..=n).map(|k| -(k as f64) * l / t + log_z[n - k] - log_z[n]).collect();
            logsumexp(&terms).exp()
        })
        .collect()
}

/// Occupations and pair occupations of the free canonical state.
pub fn free_canonical_occupations(rates: &[f64], n: usize, t: f64) -> Result<CanonicalEnsembleData> {
    let log_z = free_canonical_partition(rates, n, t)?;
    let occupations = occupations_from_table(rates, &log_z, n, t);
    let d = rates.len();
    let mut pair = vec![vec![0.0; d]; d];
    for j in 0..d {
        // ⟨n_j²⟩ = Σ_k (2k − 1) P(n_j ≥ k)
        let terms: Vec<f64> = (1..=n)
            .map(|k| ((2 * k - 1) as f64).ln() - (k as f64) * rates[j] / t + log_z[n - k] - log_z[n])
            .collect();
        pair[j][j] = if n == 0 { 0.0 } else { logsumexp(&terms).exp() };
        for l in j + 1..d {
            let mut terms = Vec::new();
            for a in 1..=n {
                for b in 1..=n - a {
                    terms.push(-(a as f64 * rates[j] + b as f64 * rates[l]) / t + log_z[n - a - b] - log_z[n]);
                }
            }
            let v = if terms.is_empty() { 0.0 } else { logsumexp(&terms).exp() };
            pair[j][l] = v;
            pair[l][j] = v;
        }
    }
    Ok(CanonicalEnsembleData { rates: rates.to_vec(), n, t, log_z, occupations, pair_occupations: pair })
}

/// One-body shift `max_j |⟨n_j⟩_N − ⟨n_j⟩_{N+1}|` over a particle-number sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftBound {
    /// `(N, max_j |⟨n_j⟩_N − ⟨n_j⟩_{N+1}|)` for `N = 1..=n_max`.
    pub differences: Vec<(usize, f64)>,
    pub max_difference: f64,
    /// Slope of `log difference` against `log N` over the upper half of the sweep.
    pub growth_exponent: f64,
}

pub fn canonical_shift_bound(rates: &[f64], n_max: usize, t: f64) -> Result<ShiftBound> {
    if n_max == 0 {
        return Err(precondition("sweep needs n_max ≥ 1"));
    }
    let log_z = free_canonical_partition(rates, n_max + 1, t)?;
    let mut prev = occupations_from_table(rates, &log_z, 1, t);
    let mut differences = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let next = occupations_from_table(rates, &log_z, n + 1, t);
        let diff = prev.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        differences.push((n, diff));
        prev = next;
    }
    let max_difference = differences.iter().map(|p| p.1).fold(0.0, f64::max);
    let upper: Vec<(f64, f64)> = differences
        .iter()
        .filter(|(n, d)| *n * 2 >= n_max && *d > 0.0)
        .map(|&(n, d)| ((n as f64).ln(), d.ln()))
        .collect();
    let growth_exponent = if upper.len() >= 2 { linear_fit(&upper).slope } else { 0.0 };
    Ok(ShiftBound { differences, max_difference, growth_exponent })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_and_single_mode() {
        assert_eq!(free_canonical_partition(&[1.0, 2.0], 0, 1.0).unwrap(), vec![0.0]);
        let lz = free_canonical_partition(&[1.7], 5, 0.5).unwrap();
        for (n, v) in lz.iter().enumerate() {
            assert!((v + n as f64 * 1.7 / 0.5).abs() < 1e-12);
        }
        let e = free_canonical_occupations(&[1.7], 5, 0.5).unwrap();
        assert!((e.occupations[0] - 5.0).abs() < 1e-12);
        assert!((e.pair_occupations[0][0] - 25.0).abs() < 1e-10);
    }

    #[test]
    fn single_mode_shift_is_one() {
        let s = canonical_shift_bound(&[2.0], 10, 1.0).unwrap();
        assert!(s.differences.iter().all(|(_, d)| (d - 1.0).abs() < 1e-12));
    }

    #[test]
    fn empty_mode_set_has_only_the_vacuum() {
        let lz = free_canonical_partition(&[], 3, 1.0).unwrap();
        assert_eq!(lz[0], 0.0);
        assert!(lz[1..].iter().all(|v| *v == f64::NEG_INFINITY));
    }
}
