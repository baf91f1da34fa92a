//! Grand-canonical free bosons: chemical potential and Wick moments.

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};

/// `Σ_j 1/(e^{(λ_j+ν)/T} − 1)` with `ν + λ_1 = e^y`.
fn occupation_sum(rates: &[f64], lambda_min: f64, y: f64, t: f64) -> f64 {
    let shift = y.exp();
    rates.iter().map(|l| 1.0 / (((l - lambda_min) + shift) / t).exp_m1()).sum()
}

/// Solve `Σ_j 1/(e^{(λ_j+ν)/T} − 1) = N_target` for `ν > −λ_1`.
///
/// Bisection runs on `y = log(ν + λ_1)`, so the result keeps full relative
/// precision in `ν + λ_1` even close to condensation.
pub fn grand_canonical_mu(rates: &[f64], n_target: f64, t: f64) -> Result<f64> {
    if rates.is_empty() || !(n_target > 0.0) || !(t > 0.0) {
        return Err(precondition("need modes, a positive target, and a positive temperature"));
    }
    let lambda_min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let f = |y: f64| occupation_sum(rates, lambda_min, y, t) - n_target;
    let mut lo = t.ln();
    let mut hi = lo;
    while f(lo) < 0.0 {
        lo -= 2.0;
    }
    while f(hi) > 0.0 {
        hi += 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp() - lambda_min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrandCanonical {
    pub nu: f64,
    pub t: f64,
    /// Bose–Einstein occupations `1/(e^{(λ_j+ν)/T} − 1)`.
    pub occupations: Vec<f64>,
    /// `⟨n_j n_k⟩ = ⟨n_j⟩⟨n_k⟩ + δ_{jk} ⟨n_j⟩(1 + ⟨n_j⟩)`.
    pub pair_occupations: Vec<Vec<f64>>,
}

pub fn grand_canonical_occupations(rates: &[f64], nu: f64, t: f64) -> Result<GrandCanonical> {
    if rates.iter().any(|l| l + nu <= 0.0) {
        return Err(precondition(format!("chemical potential {nu} must exceed −λ_1")));
    }
    let occ: Vec<f64> = rates.iter().map(|l| 1.0 / ((l + nu) / t).exp_m1()).collect();
    let d = occ.len();
    let pair = (0..d)
        .map(|j| {
            (0..d)
                .map(|k| occ[j] * occ[k] + if j == k { occ[j] * (1.0 + occ[j]) } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(GrandCanonical { nu, t, occupations: occ, pair_occupations: pair })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_inversion() {
        for &(n, t, l) in &[(3.0, 1.0, 2.0), (0.2, 5.0, 0.5), (100.0, 2.0, 1.0)] {
            let nu = grand_canonical_mu(&[l], n, t).unwrap();
            let want = t * (1.0 + 1.0 / n).ln() - l;
            assert!((nu - want).abs() < 1e-10 * want.abs().max(1.0), "{nu} {want}");
        }
    }

    #[test]
    fn particle_number_is_matched() {
        let rates = [1.0, 2.5, 4.0, 7.5];
        let nu = grand_canonical_mu(&rates, 12.0, 3.0).unwrap();
        let gc = grand_canonical_occupations(&rates, nu, 3.0).unwrap();
        assert!((gc.occupations.iter().sum::<f64>() - 12.0).abs() < 1e-9 * 12.0);
    }
}
