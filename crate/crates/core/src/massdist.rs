//! Densities of L² mass variables `Σ_j |α_j|²` with `|α_j|² ~ Exp(λ_j)` independent.
//!
//! Densities are tabulated on a uniform grid `η_i = i·Δη` starting at 0 and
//! integrated with the trapezoid rule throughout.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};

/// Which mass variable a density describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    /// Modes with `λ_j ≤ Λ`.
    LowModesG,
    /// Modes with `λ_j > Λ`.
    HighModesF,
    /// All resolved modes.
    AllModesF0,
    /// All resolved modes except one.
    LeaveOneOutF,
}

/// Uniform grid `η_i = i·spacing`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaGrid {
    pub spacing: f64,
    pub len: usize,
}

impl EtaGrid {
    pub fn new(spacing: f64, len: usize) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) || len < 2 {
            return Err(precondition(format!("invalid eta grid (spacing {spacing}, {len} points)")));
        }
        Ok(Self { spacing, len })
    }

    /// Grid covering `[0, eta_max]` with `points` nodes.
    pub fn covering(eta_max: f64, points: usize) -> Result<Self> {
        Self::new(eta_max / (points.max(2) - 1) as f64, points)
    }

    pub fn eta(&self, i: usize) -> f64 {
        i as f64 * self.spacing
    }

    pub fn max(&self) -> f64 {
        self.eta(self.len - 1)
    }

    /// Same spacing, new length.
    pub fn with_len(&self, len: usize) -> Self {
        Self { spacing: self.spacing, len }
    }

    fn same_spacing(&self, other: &EtaGrid) -> bool {
        (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassDensity {
    pub eta_grid: EtaGrid,
    pub values: Vec<f64>,
    pub rate_set: Vec<f64>,
    pub kind: DensityKind,
    /// Largest eigenvalue included in `rate_set`.
    pub tail_cutoff: f64,
    /// Negative mass removed by clipping.
    pub clipped_mass: f64,
    /// Mass lost off the end of the grid (convolution only).
    pub truncated_mass: f64,
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

impl MassDensity {
    fn from_values(eta_grid: EtaGrid, values: Vec<f64>, rates: &[f64]) -> Self {
        let tail_cutoff = rates.iter().copied().fold(0.0, f64::max);
        Self {
            eta_grid,
            values,
            rate_set: rates.to_vec(),
            kind: DensityKind::AllModesF0,
            tail_cutoff,
            clipped_mass: 0.0,
            truncated_mass: 0.0,
        }
    }

    pub fn with_kind(mut self, kind: DensityKind) -> Self {
        self.kind = kind;
        self
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.eta_grid.spacing)
    }

    /// Trapezoidal first moment.
    pub fn mean(&self) -> f64 {
        let xf: Vec<f64> = self.values.iter().enumerate().map(|(i, v)| self.eta_grid.eta(i) * v).collect();
        trapezoid(&xf, self.eta_grid.spacing)
    }

    /// Mean of the mass variable, `Σ 1/λ_j`.
    pub fn exact_mean(&self) -> f64 {
        self.rate_set.iter().map(|l| 1.0 / l).sum()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Linear interpolation; zero outside `[0, η_max]`.
    pub fn value_at(&self, x: f64) -> f64 {
        if !(x >= 0.0) || x > self.eta_grid.max() {
            return 0.0;
        }
        let t = x / self.eta_grid.spacing;
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Mass of `[δ, η_max]`, interpolating the partial first cell.
    pub fn mass_above(&self, delta: f64) -> f64 {
        let h = self.eta_grid.spacing;
        let start = (delta / h).ceil() as usize;
        if start >= self.values.len() {
            return 0.0;
        }
        let head = 0.5 * (self.value_at(delta) + self.values[start]) * (self.eta_grid.eta(start) - delta);
        head + trapezoid(&self.values[start..], h)
    }

    /// `∫ |f − g|` over the common grid.
    pub fn l1_distance(&self, other: &MassDensity) -> Result<f64> {
        if !self.eta_grid.same_spacing(&other.eta_grid) {
            return Err(precondition("densities live on different grids"));
        }
        let n = self.values.len().max(other.values.len());
        let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        let diff: Vec<f64> = (0..n).map(|i| (get(&self.values, i) - get(&other.values, i)).abs()).collect();
        Ok(trapezoid(&diff, self.eta_grid.spacing))
    }

    pub fn sup_distance(&self, other: &MassDensity) -> f64 {
        let n = self.values.len().max(other.values.len());
        let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        (0..n).map(|i| (get(&self.values, i) - get(&other.values, i)).abs()).fold(0.0, f64::max)
    }
}

fn check_rates(rates: &[f64]) -> Result<()> {
    if rates.is_empty() {
        return Err(precondition("rate set is empty"));
    }
    if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(precondition(format!("rates must be positive and finite, got {r}")));
    }
    Ok(())
}

/// `φ(s) = Π_j 1/(1 − i s/λ_j)`: characteristic function of the mass.
pub fn char_function(rates: &[f64], s_grid: &[f64]) -> Result<Vec<Complex64>> {
    check_rates(rates)?;
    Ok(s_grid.iter().map(|&s| cf_at(rates, s)).collect())
}

fn cf_at(rates: &[f64], s: f64) -> Complex64 {
    rates.iter().fold(Complex64::new(1.0, 0.0), |acc, l| acc / Complex64::new(1.0, -s / l))
}

fn log_cf_modulus(rates: &[f64], s: f64) -> f64 {
    -0.5 * rates.iter().map(|l| (s / l).powi(2).ln_1p()).sum::<f64>()
}

/// Smallest `s` (to bisection precision) with `|φ(s)| ≤ threshold`.
pub fn cf_decay_point(rates: &[f64], threshold: f64) -> Result<f64> {
    check_rates(rates)?;
    if rates.len() < 2 {
        return Err(precondition("at least two rates are needed for an integrable characteristic function"));
    }
    let target = threshold.ln();
    let mut hi = rates.iter().copied().fold(f64::INFINITY, f64::min);
    while log_cf_modulus(rates, hi) > target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if log_cf_modulus(rates, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

pub const CLIP_BUDGET: f64 = 1e-3;
pub const CF_TAIL_THRESHOLD: f64 = 1e-8;

/// Fourier inversion `f(η) = (1/π) ∫_0^{s_max} Re(e^{−isη} φ(s)) ds` with the
/// trapezoid rule on `n_s` equispaced nodes.
///
/// The discrete rule aliases `f` with period `2π/Δs`; callers keep that period
/// well beyond the support of interest (see [`density_from_cf_auto`]).
pub fn density_from_cf(rates: &[f64], eta_grid: EtaGrid, s_max: f64, n_s: usize) -> Result<MassDensity> {
    check_rates(rates)?;
    if rates.len() < 2 {
        return Err(precondition("Fourier inversion needs at least two rates"));
    }
    if n_s < 2 || !(s_max > 0.0) {
        return Err(precondition(format!("invalid s grid (s_max {s_max}, {n_s} nodes)")));
    }
    let modulus = log_cf_modulus(rates, s_max).exp();
    if modulus >= CF_TAIL_THRESHOLD {
        return Err(Error::CfTruncation { s_max, modulus });
    }
    let ds = s_max / (n_s - 1) as f64;
    let terms: Vec<(f64, Complex64)> = (0..n_s)
        .map(|k| {
            let s = k as f64 * ds;
            let w = if k == 0 || k == n_s - 1 { 0.5 } else { 1.0 };
            (s, cf_at(rates, s) * (w * ds / std::f64::consts::PI))
        })
        .collect();
    let h = eta_grid.spacing;
    let mut values = vec![0.0; eta_grid.len];
    const CHUNK: usize = 256;
    values.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let x0 = (c * CHUNK) as f64 * h;
        for &(s, a) in &terms {
            let step = Complex64::from_polar(1.0, -s * h);
            let mut rot = Complex64::from_polar(1.0, -s * x0) * a;
            for v in chunk.iter_mut() {
                *v += rot.re;
                rot *= step;
            }
        }
    });
    let mut clipped = 0.0;
    for v in values.iter_mut() {
        if *v < 0.0 {
            clipped += -*v * h;
            *v = 0.0;
        }
    }
    if clipped > CLIP_BUDGET {
        return Err(Error::ClippedMass { clipped });
    }
    let mut d = MassDensity::from_values(eta_grid, values, rates);
    d.clipped_mass = clipped;
    Ok(d)
}

/// Effective support of the mass variable: mean plus forty decay lengths of
/// the slowest exponential.
pub fn support_extent(rates: &[f64]) -> f64 {
    let mean: f64 = rates.iter().map(|l| 1.0 / l).sum();
    let slowest = rates.iter().copied().fold(f64::INFINITY, f64::min);
    mean + 40.0 / slowest
}

/// [`density_from_cf`] with `s_max` from the decay threshold and a node spacing
/// whose aliasing period is at least twice the effective support.
pub fn density_from_cf_auto(rates: &[f64], eta_grid: EtaGrid) -> Result<MassDensity> {
    let s_max = cf_decay_point(rates, 0.5 * CF_TAIL_THRESHOLD)?;
    let extent = support_extent(rates).max(eta_grid.max());
    let ds = std::f64::consts::PI / extent;
    let n_s = (s_max / ds).ceil() as usize + 1;
    density_from_cf(rates, eta_grid, s_max, n_s)
}

pub const CLOSED_FORM_MAX_RATES: usize = 20;

/// Hypoexponential density `Σ_j (Π_{k≠j} λ_k/(λ_k − λ_j)) λ_j e^{−λ_j η}`.
pub fn density_closed_form(rates: &[f64], eta_grid: EtaGrid) -> Result<MassDensity> {
    check_rates(rates)?;
    if rates.len() > CLOSED_FORM_MAX_RATES {
        return Err(precondition(format!(
            "closed form limited to {CLOSED_FORM_MAX_RATES} rates, got {}",
            rates.len()
        )));
    }
    let max = rates.iter().copied().fold(0.0, f64::max);
    let mut sorted = rates.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if gap < 1e-6 * max {
        return Err(Error::NearDegenerateRates { gap });
    }
    let coeffs: Vec<f64> = rates
        .iter()
        .enumerate()
        .map(|(j, &lj)| {
            rates
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .fold(lj, |acc, (_, &lk)| acc * lk / (lk - lj))
        })
        .collect();
    let mut clipped = 0.0;
    let values = (0..eta_grid.len)
        .map(|i| {
            let x = eta_grid.eta(i);
            let v: f64 = coeffs.iter().zip(rates).map(|(c, l)| c * (-l * x).exp()).sum();
            if v < 0.0 {
                clipped += -v * eta_grid.spacing;
                0.0
            } else {
                v
            }
        })
        .collect();
    let mut d = MassDensity::from_values(eta_grid, values, rates);
    d.clipped_mass = clipped;
    Ok(d)
}

/// Closed form when admissible, Fourier inversion otherwise.
pub fn density_of_rates(rates: &[f64], eta_grid: EtaGrid) -> Result<MassDensity> {
    match density_closed_form(rates, eta_grid) {
        Ok(d) => Ok(d),
        Err(Error::NearDegenerateRates { .. }) | Err(Error::Precondition(_)) if rates.len() >= 2 => {
            density_from_cf_auto(rates, eta_grid)
        }
        Err(e) => Err(e),
    }
}

/// Trapezoidal convolution `(a*b)(η) = ∫_0^η a(t) b(η−t) dt`.
///
/// The result keeps the longer of the two grids; mass beyond it is reported
/// in `truncated_mass`.
pub fn convolve(a: &MassDensity, b: &MassDensity) -> Result<MassDensity> {
    if !a.eta_grid.same_spacing(&b.eta_grid) {
        return Err(precondition(format!(
            "convolution needs equal grid spacing ({} vs {})",
            a.eta_grid.spacing, b.eta_grid.spacing
        )));
    }
    let h = a.eta_grid.spacing;
    let (la, lb) = (a.values.len(), b.values.len());
    let full_len = la + lb - 1;
    let size = full_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let pad = |v: &[f64]| {
        let mut out = vec![Complex64::new(0.0, 0.0); size];
        for (o, x) in out.iter_mut().zip(v) {
            o.re = *x;
        }
        out
    };
    let mut fa = pad(&a.values);
    let mut fb = pad(&b.values);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let full: Vec<f64> = (0..full_len)
        .map(|i| {
            let rect = fa[i].re / size as f64;
            let ends = if i == 0 {
                rect
            } else {
                0.5 * (a.values[0] * get(&b.values, i) + get(&a.values, i) * b.values[0])
            };
            ((rect - ends) * h).max(0.0)
        })
        .collect();
    let keep = la.max(lb);
    let truncated = trapezoid(&full[keep - 1..], h);
    let values = full[..keep].to_vec();
    let mut rates = a.rate_set.clone();
    rates.extend_from_slice(&b.rate_set);
    let mut d = MassDensity::from_values(a.eta_grid.with_len(keep), values, &rates);
    d.truncated_mass = truncated;
    d.clipped_mass = a.clipped_mass + b.clipped_mass;
    d.kind = DensityKind::AllModesF0;
    Ok(d)
}

/// `z^r_{ε,m} = ∫_0^∞ e^{−(η−m)²/ε} f_0(η) dη` by trapezoid quadrature.
pub fn penalized_partition(f0: &MassDensity, m: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(precondition(format!("penalty width must be positive, got {eps}")));
    }
    if !(m > 0.0 && m < f0.eta_grid.max()) {
        return Err(precondition(format!("mass {m} outside the grid (0, {})", f0.eta_grid.max())));
    }
    let cells = eps.sqrt() / f0.eta_grid.spacing;
    if cells < 20.0 {
        return Err(Error::UnderResolved(format!(
            "penalty window spans {cells:.1} cells, need at least 20; refine the eta grid"
        )));
    }
    let integrand: Vec<f64> = f0
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (-(f0.eta_grid.eta(i) - m).powi(2) / eps).exp() * v)
        .collect();
    Ok(trapezoid(&integrand, f0.eta_grid.spacing))
}

/// Low-mode, high-mode, and full densities for the split `λ_j ≤ Λ` vs `λ_j > Λ`.
#[derive(Debug, Clone)]
pub struct SplitDensities {
    pub low: MassDensity,
    pub high: MassDensity,
    pub full: MassDensity,
}

/// Densities for a split of `rates` at `cutoff`. The high-mode density is
/// tabulated on a shortened grid of the same spacing covering its support.
pub fn split_densities(rates: &[f64], cutoff: f64, eta_grid: EtaGrid) -> Result<SplitDensities> {
    let low_rates: Vec<f64> = rates.iter().copied().filter(|&l| l <= cutoff).collect();
    let high_rates: Vec<f64> = rates.iter().copied().filter(|&l| l > cutoff).collect();
    if low_rates.is_empty() || high_rates.is_empty() {
        return Err(precondition(format!("cutoff {cutoff} does not split the rate set")));
    }
    let low = density_of_rates(&low_rates, eta_grid)?.with_kind(DensityKind::LowModesG);
    let high_len = ((support_extent(&high_rates) / eta_grid.spacing).ceil() as usize + 2).min(eta_grid.len);
    let high = density_of_rates(&high_rates, eta_grid.with_len(high_len))?.with_kind(DensityKind::HighModesF);
    let full = density_of_rates(rates, eta_grid)?.with_kind(DensityKind::AllModesF0);
    Ok(SplitDensities { low, high, full })
}

/// Exact conditional moment `E[|α_j|² | Σ|α|² = m]` for independent
/// exponential masses: `∫_0^m x λ_j e^{−λ_j x} F_j(m−x) dx / f_0(m)`, where
/// `F_j` is the leave-one-out density.
pub fn conditioned_mode_mean(rates: &[f64], j: usize, m: f64, points: usize) -> Result<f64> {
    if j >= rates.len() || rates.len() < 2 {
        return Err(precondition("mode index out of range or too few rates"));
    }
    let grid = EtaGrid::covering(m, points.max(3))?;
    let others: Vec<f64> = rates.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &l)| l).collect();
    let fj = density_of_rates(&others, grid)?.with_kind(DensityKind::LeaveOneOutF);
    let lj = rates[j];
    let n = grid.len;
    let integrand: Vec<f64> = (0..n)
        .map(|i| {
            let x = grid.eta(i);
            x * lj * (-lj * x).exp() * fj.values[n - 1 - i]
        })
        .collect();
    let num = simpson(&integrand, grid.spacing);
    let dens: Vec<f64> = (0..n).map(|i| lj * (-lj * grid.eta(i)).exp() * fj.values[n - 1 - i]).collect();
    Ok(num / simpson(&dens, grid.spacing))
}

fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n % 2 == 0 {
        // fall back to trapezoid on the last interval
        return simpson(&values[..n - 1], h) + 0.5 * h * (values[n - 2] + values[n - 1]);
    }
    let inner: f64 = values[1..n - 1]
        .iter()
        .enumerate()
        .map(|(i, v)| if i % 2 == 0 { 4.0 * v } else { 2.0 * v })
        .sum();
    h / 3.0 * (values[0] + inner + values[n - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_rate_modulus() {
        let phi = char_function(&[3.0], &[0.0, 1.0, 5.0]).unwrap();
        assert_eq!(phi[0], Complex64::new(1.0, 0.0));
        for (p, s) in phi.iter().zip([0.0, 1.0, 5.0]) {
            assert!((p.norm_sqr() - 1.0 / (1.0 + s * s / 9.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_form_two_rates() {
        let g = EtaGrid::new(0.01, 2001).unwrap();
        let d = density_closed_form(&[1.0, 2.0], g).unwrap();
        for i in 0..g.len {
            let x = g.eta(i);
            assert!((d.values[i] - 2.0 * ((-x).exp() - (-2.0 * x).exp())).abs() < 1e-13);
        }
        assert!(matches!(density_closed_form(&[1.0, 1.0 + 1e-9], g), Err(Error::NearDegenerateRates { .. })));
    }

    #[test]
    fn delta_convolution_is_identity() {
        let g = EtaGrid::new(0.01, 500).unwrap();
        let b = density_closed_form(&[2.0, 5.0], g).unwrap();
        let mut values = vec![0.0; 500];
        values[0] = 2.0 / g.spacing;
        let delta = MassDensity::from_values(g, values, &[1.0]);
        let c = convolve(&delta, &b).unwrap();
        for i in 1..500 {
            assert!((c.values[i] - b.values[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn penalized_partition_requires_resolution() {
        let g = EtaGrid::new(0.01, 400).unwrap();
        let d = density_closed_form(&[2.0, 5.0], g).unwrap();
        assert!(matches!(penalized_partition(&d, 1.0, 1e-3), Err(Error::UnderResolved(_))));
        assert!(penalized_partition(&d, 1.0, 0.1).unwrap() > 0.0);
    }
}
