//! Sector decomposition of the free canonical state across a spectral split.

use serde::{Deserialize, Serialize};

use super::canonical::free_canonical_partition;
use crate::error::{precondition, Result};
use crate::stats::logsumexp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationCoeffs {
    /// Number of modes with `λ ≤ Λ`.
    pub low_modes: usize,
    /// `c_n = Z⁻_n Z⁺_{N−n} / Z_N`, `n = 0..=N`.
    pub c: Vec<f64>,
    /// `M = ⌈N − Tδ⌉`.
    pub m_index: usize,
    /// `D_M = Σ_{n ≥ M} c_n`.
    pub d_m: f64,
    /// `d_n = c_n / D_M` for `n ≥ M`, zero below.
    pub d: Vec<f64>,
    /// `|log Σ_n Z⁻_n Z⁺_{N−n} − log Z_N|`.
    pub sector_identity_gap: f64,
}

/// Split `rates` at `cutoff` and compute `c_n`, `M`, `D_M`, `d_n`.
///
/// An empty high side is the degenerate split (`c_N = 1`); an empty low side
/// is rejected.
pub fn factorization_coeffs(rates: &[f64], cutoff: f64, n: usize, t: f64, delta: f64) -> Result<FactorizationCoeffs> {
    let low: Vec<f64> = rates.iter().copied().filter(|&l| l <= cutoff).collect();
    let high: Vec<f64> = rates.iter().copied().filter(|&l| l > cutoff).collect();
    if low.is_empty() {
        return Err(precondition(format!("no modes below the split {cutoff}")));
    }
    if !(t * delta < n as f64) || delta < 0.0 {
        return Err(precondition(format!("need 0 ≤ Tδ < N (Tδ = {}, N = {n})", t * delta)));
    }
    let lz = free_canonical_partition(rates, n, t)?;
    let lzl = free_canonical_partition(&low, n, t)?;
    let lzh = free_canonical_partition(&high, n, t)?;
    let log_terms: Vec<f64> = (0..=n).map(|k| lzl[k] + lzh[n - k]).collect();
    let sector_identity_gap = (logsumexp(&log_terms) - lz[n]).abs();
    let c: Vec<f64> = log_terms.iter().map(|lt| (lt - lz[n]).exp()).collect();
    let m_index = ((n as f64 - t * delta).ceil().max(0.0)) as usize;
    let d_m: f64 = c[m_index..].iter().sum();
    let d = c.iter().enumerate().map(|(k, ck)| if k >= m_index { ck / d_m } else { 0.0 }).collect();
    Ok(FactorizationCoeffs { low_modes: low.len(), c, m_index, d_m, d, sector_identity_gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_sum_to_one() {
        let f = factorization_coeffs(&[1.0, 2.0, 3.0, 5.0, 8.0], 2.5, 20, 4.0, 1.0).unwrap();
        assert!((f.c.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!((f.d.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(f.sector_identity_gap < 1e-10);
        assert_eq!(f.m_index, 16);
    }

    #[test]
    fn degenerate_split_puts_everything_low() {
        let f = factorization_coeffs(&[1.0, 2.0], 10.0, 6, 1.0, 0.5).unwrap();
        assert!((f.c[6] - 1.0).abs() < 1e-12);
        assert!(f.c[..6].iter().all(|c| *c == 0.0));
        assert!(factorization_coeffs(&[1.0, 2.0], 0.5, 6, 1.0, 0.5).is_err());
    }
}
