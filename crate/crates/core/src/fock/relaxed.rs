//! Sector weights of the mass-relaxed free Gibbs state.

use serde::{Deserialize, Serialize};

use super::canonical::free_canonical_partition;
use crate::error::{precondition, Result};
use crate::stats::logsumexp;

/// `a_N ∝ Z_N exp(−(N/T − m)²/ε)` for `N = 0..=N_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorWeights {
    pub weights: Vec<f64>,
    pub eps: f64,
    pub m: f64,
    pub t: f64,
    /// `log Σ_N Z_N exp(−(N/T − m)²/ε)` over the window.
    pub log_z_total: f64,
    /// Estimated relative mass beyond `N_max`.
    pub lost_mass: f64,
}

impl SectorWeights {
    /// `Σ_N a_N (N/T)^k`.
    pub fn moment(&self, k: i32) -> f64 {
        self.weights.iter().enumerate().map(|(n, a)| a * (n as f64 / self.t).powi(k)).sum()
    }

    /// Sector with the largest weight.
    pub fn mode(&self) -> usize {
        self.weights
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (n, &a)| if a > best.1 { (n, a) } else { best })
            .0
    }
}

const LOST_MASS_BUDGET: f64 = 1e-12;

pub fn relaxed_sector_weights(rates: &[f64], m: f64, t: f64, eps: f64, n_max: usize) -> Result<SectorWeights> {
    if !(m > 0.0 && eps > 0.0 && t > 0.0) {
        return Err(precondition("mass, penalty width, and temperature must be positive"));
    }
    let needed = m * t + 10.0 * (eps * t * t / 2.0).sqrt();
    if (n_max as f64) < needed {
        return Err(precondition(format!("N_max = {n_max} does not cover the window (needs ≥ {needed:.1})")));
    }
    let extended = 2 * n_max + 10;
    let log_z = free_canonical_partition(rates, extended, t)?;
    let log_a: Vec<f64> =
        log_z.iter().enumerate().map(|(n, lz)| lz - (n as f64 / t - m).powi(2) / eps).collect();
    let total_ext = logsumexp(&log_a);
    let log_z_total = logsumexp(&log_a[..=n_max]);
    let lost_mass = if n_max + 1 < log_a.len() { (logsumexp(&log_a[n_max + 1..]) - total_ext).exp() } else { 0.0 };
    if lost_mass > LOST_MASS_BUDGET {
        return Err(precondition(format!("window truncation loses {lost_mass:.3e} of the weight; raise N_max")));
    }
    let weights = log_a[..=n_max].iter().map(|la| (la - log_z_total).exp()).collect();
    Ok(SectorWeights { weights, eps, m, t, log_z_total, lost_mass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn narrow_penalty_pins_the_sector() {
        let w = relaxed_sector_weights(&[1.0, 2.0, 3.5], 1.0, 8.0, 1e-6, 30).unwrap();
        assert_eq!(w.mode(), 8);
        assert!(w.weights[8] > 1.0 - 1e-6);
        assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_must_be_covered() {
        assert!(relaxed_sector_weights(&[1.0], 1.0, 8.0, 1.0, 8).is_err());
    }
}
