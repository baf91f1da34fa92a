use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A field `u = Σ α_j u_j` in the span of the first `len()` eigenmodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub coeffs: Vec<Complex64>,
}

impl Field {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(d: usize) -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0); d] }
    }

    /// Unit vector along mode `j` (0-based).
    pub fn unit(d: usize, j: usize) -> Self {
        let mut f = Self::zeros(d);
        f.coeffs[j] = Complex64::new(1.0, 0.0);
        f
    }

    pub fn from_polar(radii: &[f64], phases: &[f64]) -> Self {
        Self {
            coeffs: radii
                .iter()
                .zip(phases)
                .map(|(&r, &t)| Complex64::from_polar(r, t))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// L² mass `Σ |α_j|²`.
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn mode_masses(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    /// Restriction to the first `d` modes.
    pub fn truncated(&self, d: usize) -> Self {
        Self { coeffs: self.coeffs[..d.min(self.len())].to_vec() }
    }
}
