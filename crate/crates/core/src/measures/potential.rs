//! Even pair potentials `w(x − y)`.

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// `depth · exp(−r²/(2 width²))`; the sign of `depth` picks repulsive or attractive.
    GaussianBump { width: f64, depth: f64 },
    /// `depth` on `|r| ≤ width`, zero outside.
    StepWell { width: f64, depth: f64 },
    /// Unit-mass Gaussian of standard deviation `width`, approximating `δ(r)`.
    DeltaApprox { width: f64 },
    /// Values at `r_k = k·spacing`, `k ≥ 0`, interpolated linearly and extended evenly.
    Tabulated { spacing: f64, values: Vec<f64> },
    /// `w ≡ 0`.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionPotential {
    #[serde(flatten)]
    pub kind: PotentialKind,
}

impl InteractionPotential {
    pub fn new(kind: PotentialKind) -> Result<Self> {
        match &kind {
            PotentialKind::GaussianBump { width, .. }
            | PotentialKind::StepWell { width, .. }
            | PotentialKind::DeltaApprox { width } => {
                if !(*width > 0.0 && width.is_finite()) {
                    return Err(precondition(format!("potential width must be positive, got {width}")));
                }
            }
            PotentialKind::Tabulated { spacing, values } => {
                if !(*spacing > 0.0) || values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
                    return Err(precondition("tabulated potential needs a positive spacing and two finite values"));
                }
            }
            PotentialKind::Zero => {}
        }
        Ok(Self { kind })
    }

    pub fn gaussian_bump(width: f64, depth: f64) -> Result<Self> {
        Self::new(PotentialKind::GaussianBump { width, depth })
    }

    pub fn step_well(width: f64, depth: f64) -> Result<Self> {
        Self::new(PotentialKind::StepWell { width, depth })
    }

    pub fn delta_approx(width: f64) -> Result<Self> {
        Self::new(PotentialKind::DeltaApprox { width })
    }

    pub fn tabulated(spacing: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(PotentialKind::Tabulated { spacing, values })
    }

    pub fn zero() -> Self {
        Self { kind: PotentialKind::Zero }
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            PotentialKind::Zero => true,
            PotentialKind::GaussianBump { depth, .. } | PotentialKind::StepWell { depth, .. } => *depth == 0.0,
            PotentialKind::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
            PotentialKind::DeltaApprox { .. } => false,
        }
    }

    /// Largest `|r|` at which the potential is defined (infinite for analytic kinds).
    pub fn range(&self) -> f64 {
        match &self.kind {
            PotentialKind::Tabulated { spacing, values } => spacing * (values.len() - 1) as f64,
            _ => f64::INFINITY,
        }
    }

    /// `w(r)`; `None` beyond a tabulated range.
    pub fn value(&self, r: f64) -> Option<f64> {
        let a = r.abs();
        Some(match &self.kind {
            PotentialKind::GaussianBump { width, depth } => depth * (-0.5 * (a / width).powi(2)).exp(),
            PotentialKind::StepWell { width, depth } => {
                if a <= *width {
                    *depth
                } else {
                    0.0
                }
            }
            PotentialKind::DeltaApprox { width } => {
                (-0.5 * (a / width).powi(2)).exp() / (width * (2.0 * std::f64::consts::PI).sqrt())
            }
            PotentialKind::Tabulated { spacing, values } => {
                let t = a / spacing;
                if t > (values.len() - 1) as f64 + 1e-12 {
                    return None;
                }
                let i = (t.floor() as usize).min(values.len() - 2);
                let f = t - i as f64;
                values[i] * (1.0 - f) + values[i + 1] * f
            }
            PotentialKind::Zero => 0.0,
        })
    }

    /// `w(r)` or a precondition error when undefined.
    pub fn value_checked(&self, r: f64) -> Result<f64> {
        self.value(r)
            .ok_or_else(|| precondition(format!("potential undefined at offset {r} (range {})", self.range())))
    }

    pub fn positive_part(&self, r: f64) -> Option<f64> {
        self.value(r).map(|v| v.max(0.0))
    }

    pub fn negative_part(&self, r: f64) -> Option<f64> {
        self.value(r).map(|v| (-v).max(0.0))
    }

    /// Largest `|w(r) − w(−r)|` over a sample of offsets.
    pub fn evenness_residual(&self, max_offset: f64, samples: usize) -> f64 {
        (0..=samples)
            .map(|k| max_offset * k as f64 / samples as f64)
            .filter_map(|r| Some((self.value(r)? - self.value(-r)?).abs()))
            .fold(0.0, f64::max)
    }

    fn integration_extent(&self) -> f64 {
        match &self.kind {
            PotentialKind::GaussianBump { width, .. } | PotentialKind::DeltaApprox { width } => 12.0 * width,
            PotentialKind::StepWell { width, .. } => *width,
            PotentialKind::Tabulated { .. } => self.range(),
            PotentialKind::Zero => 1.0,
        }
    }

    /// `‖w‖_{L^p(ℝ)}` by midpoint quadrature over the support; `p = ∞` gives the sup.
    pub fn lp_norm(&self, p: f64, part: Part) -> f64 {
        let extent = self.integration_extent();
        let n = 200_000;
        let h = extent / n as f64;
        let f = |r: f64| match part {
            Part::Whole => self.value(r).unwrap_or(0.0).abs(),
            Part::Positive => self.positive_part(r).unwrap_or(0.0),
            Part::Negative => self.negative_part(r).unwrap_or(0.0),
        };
        if p.is_infinite() {
            return (0..n).map(|k| f((k as f64 + 0.5) * h)).fold(0.0, f64::max);
        }
        let half: f64 = (0..n).map(|k| f((k as f64 + 0.5) * h).powf(p)).sum::<f64>() * h;
        (2.0 * half).powf(1.0 / p)
    }

    pub fn lp_report(&self, exponents: &[f64]) -> Vec<LpNorm> {
        exponents
            .iter()
            .map(|&p| LpNorm {
                p,
                whole: self.lp_norm(p, Part::Whole),
                positive: self.lp_norm(p, Part::Positive),
                negative: self.lp_norm(p, Part::Negative),
            })
            .collect()
    }

    /// Whether the attractive part is admissible for the focusing theory,
    /// i.e. `w_− ∈ L^p` for some `p > s/(s−2)`; vacuous when `w_− = 0`.
    pub fn focusing_admissible(&self, s_exponent: f64, p: f64) -> bool {
        let threshold = if s_exponent.is_infinite() { 1.0 } else { s_exponent / (s_exponent - 2.0) };
        self.lp_norm(f64::INFINITY, Part::Negative) == 0.0 || (p > threshold && self.lp_norm(p, Part::Negative).is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Whole,
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpNorm {
    pub p: f64,
    pub whole: f64,
    pub positive: f64,
    pub negative: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_approx_has_unit_mass() {
        let w = InteractionPotential::delta_approx(0.05).unwrap();
        assert!((w.lp_norm(1.0, Part::Whole) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn split_and_evenness() {
        let w = InteractionPotential::gaussian_bump(0.5, -2.0).unwrap();
        assert_eq!(w.positive_part(0.3), Some(0.0));
        assert!(w.negative_part(0.0).unwrap() == 2.0);
        assert!(w.evenness_residual(3.0, 100) < 1e-15);
        let norms = w.lp_report(&[1.0, 2.0]);
        let exact_l1 = 2.0 * 0.5 * (2.0 * std::f64::consts::PI).sqrt();
        assert!((norms[0].negative - exact_l1).abs() < 1e-6);
        assert_eq!(norms[0].positive, 0.0);
    }

    #[test]
    fn tabulated_range_is_enforced() {
        let w = InteractionPotential::tabulated(0.5, vec![1.0, 0.5, 0.0]).unwrap();
        assert_eq!(w.value(0.25), Some(0.75));
        assert_eq!(w.value(-0.25), Some(0.75));
        assert!(w.value(1.5).is_none());
        assert!(w.value_checked(2.0).is_err());
    }
}
