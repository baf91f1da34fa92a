//! Small statistics helpers shared by the estimators.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    LinearFit { slope, intercept: my - slope * mx }
}

pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Weights scaled so the largest is 1 (zero for `-inf` log-weights).
pub fn relative_weights(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![0.0; log_weights.len()];
    }
    log_weights.iter().map(|l| (l - max).exp()).collect()
}

/// Kish effective sample size `(Σw)² / Σw²`.
pub fn effective_sample_size(log_weights: &[f64]) -> f64 {
    let w = relative_weights(log_weights);
    let s: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    if s2 == 0.0 {
        0.0
    } else {
        s * s / s2
    }
}

/// Largest single normalized weight.
pub fn max_weight_fraction(log_weights: &[f64]) -> f64 {
    let w = relative_weights(log_weights);
    let s: f64 = w.iter().sum();
    if s == 0.0 {
        1.0
    } else {
        w.iter().copied().fold(0.0, f64::max) / s
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64) -> Self {
        Self { value, stderr }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }
}

pub const DEFAULT_BATCHES: usize = 20;

/// Self-normalized weighted mean of `values` with a batch-means standard error.
///
/// Samples are split into `n_batches` contiguous batches; the error is the
/// spread of the per-batch ratio estimates.
pub fn weighted_mean(values: &[f64], weights: &[f64], n_batches: usize) -> Estimate {
    let ratio = |v: &[f64], w: &[f64]| {
        let sw: f64 = w.iter().sum();
        if sw == 0.0 {
            f64::NAN
        } else {
            v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw
        }
    };
    let value = ratio(values, weights);
    let n = values.len();
    let b = n_batches.min(n);
    if b < 2 {
        return Estimate::new(value, f64::NAN);
    }
    let size = n / b;
    let batch: Vec<f64> = (0..b)
        .map(|i| {
            let end = if i + 1 == b { n } else { (i + 1) * size };
            ratio(&values[i * size..end], &weights[i * size..end])
        })
        .filter(|x| x.is_finite())
        .collect();
    if batch.len() < 2 {
        return Estimate::new(value, f64::NAN);
    }
    let mean = batch.iter().sum::<f64>() / batch.len() as f64;
    let var = batch.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (batch.len() - 1) as f64;
    Estimate::new(value, (var / batch.len() as f64).sqrt())
}

/// Unweighted mean with a batch-means standard error.
pub fn batch_mean(values: &[f64], n_batches: usize) -> Estimate {
    weighted_mean(values, &vec![1.0; values.len()], n_batches)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_line() {
        let pts: Vec<_> = (0..10).map(|i| (i as f64, 3.0 * i as f64 - 1.0)).collect();
        let f = linear_fit(&pts);
        assert!((f.slope - 3.0).abs() < 1e-12 && (f.intercept + 1.0).abs() < 1e-12);
    }

    #[test]
    fn logsumexp_is_stable() {
        assert!((logsumexp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(logsumexp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn ess_of_uniform_and_degenerate_weights() {
        assert!((effective_sample_size(&[0.0; 50]) - 50.0).abs() < 1e-12);
        let mut lw = vec![f64::NEG_INFINITY; 10];
        lw[3] = 2.0;
        assert!((effective_sample_size(&lw) - 1.0).abs() < 1e-12);
        assert_eq!(max_weight_fraction(&lw), 1.0);
    }

    #[test]
    fn weighted_mean_matches_direct_ratio() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let w: Vec<f64> = (0..100).map(|i| 1.0 + (i % 3) as f64).collect();
        let direct = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>();
        let e = weighted_mean(&v, &w, 10);
        assert!((e.value - direct).abs() < 1e-12);
        assert!(e.stderr > 0.0);
    }
}
