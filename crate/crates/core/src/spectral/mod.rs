//! Eigenbasis of the one-dimensional trap `h = -d²/dx² + |x|^s`.
//!
//! Finite `s` lives on `[-L, L]` with hard walls; `s = ∞` is the Dirichlet box
//! `[0, 1]`. Both use interior grid points and uniform quadrature weights.

mod banded;
mod io;

pub use io::{
    decode_basis, encode_basis, read_basis, write_basis, write_eigenvalues_csv, BASIS_FORMAT_VERSION, BASIS_MAGIC,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::field::Field;
use banded::SymBand;

/// Finite-difference stencil used for `-d²/dx²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    FiniteDifferenceOrder2,
    FiniteDifferenceOrder4,
}

impl Scheme {
    pub fn order(self) -> i32 {
        match self {
            Scheme::FiniteDifferenceOrder2 => 2,
            Scheme::FiniteDifferenceOrder4 => 4,
        }
    }

    fn bandwidth(self) -> usize {
        match self {
            Scheme::FiniteDifferenceOrder2 => 1,
            Scheme::FiniteDifferenceOrder4 => 2,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Scheme::FiniteDifferenceOrder2 => 2,
            Scheme::FiniteDifferenceOrder4 => 4,
        }
    }

    /// Scheme with the given finite-difference order.
    pub fn from_order(order: u8) -> Option<Self> {
        Self::from_code(order)
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            2 => Some(Scheme::FiniteDifferenceOrder2),
            4 => Some(Scheme::FiniteDifferenceOrder4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Half-width `L` of `[-L, L]`; ignored for the box.
    pub domain_half_width: f64,
    pub n_points: usize,
    pub scheme: Scheme,
}

impl GridSpec {
    pub const MIN_POINTS: usize = 64;

    pub fn new(domain_half_width: f64, n_points: usize, scheme: Scheme) -> Self {
        Self { domain_half_width, n_points, scheme }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < Self::MIN_POINTS {
            return Err(precondition(format!(
                "grid needs at least {} points, got {}",
                Self::MIN_POINTS,
                self.n_points
            )));
        }
        if !(self.domain_half_width > 0.0 && self.domain_half_width.is_finite()) {
            return Err(precondition(format!(
                "domain half-width must be positive, got {}",
                self.domain_half_width
            )));
        }
        Ok(())
    }

    /// Interior grid points and their spacing.
    pub fn points(&self, s_exponent: f64) -> (Vec<f64>, f64) {
        let n = self.n_points;
        if s_exponent.is_infinite() {
            let h = 1.0 / (n as f64 + 1.0);
            ((0..n).map(|i| (i as f64 + 1.0) * h).collect(), h)
        } else {
            let l = self.domain_half_width;
            let h = 2.0 * l / (n as f64 + 1.0);
            ((0..n).map(|i| -l + (i as f64 + 1.0) * h).collect(), h)
        }
    }
}

/// Trap potential `|x|^s`, zero inside the box for `s = ∞`.
pub fn potential(s_exponent: f64, x: f64) -> f64 {
    if s_exponent.is_infinite() {
        0.0
    } else {
        x.abs().powf(s_exponent)
    }
}

fn check_exponent(s_exponent: f64) -> Result<()> {
    if s_exponent.is_nan() || s_exponent <= 2.0 {
        return Err(precondition(format!("trap exponent must exceed 2 (or be infinite), got {s_exponent}")));
    }
    Ok(())
}

fn assemble(s_exponent: f64, grid: &GridSpec) -> (SymBand, Vec<f64>, f64) {
    let (x, h) = grid.points(s_exponent);
    let n = grid.n_points;
    let inv_h2 = 1.0 / (h * h);
    let mut a = SymBand::new(n, grid.scheme.bandwidth());
    match grid.scheme {
        Scheme::FiniteDifferenceOrder2 => {
            for i in 0..n {
                a.set(i, 0, 2.0 * inv_h2 + potential(s_exponent, x[i]));
                if i + 1 < n {
                    a.set(i, 1, -inv_h2);
                }
            }
        }
        Scheme::FiniteDifferenceOrder4 => {
            // Ghost values beyond the wall: u(-h) = 0, u(-2h) = -u(h).
            for i in 0..n {
                let mut diag = 2.5;
                if i == 0 || i == n - 1 {
                    diag -= 1.0 / 12.0;
                }
                a.set(i, 0, diag * inv_h2 + potential(s_exponent, x[i]));
                if i + 1 < n {
                    a.set(i, 1, -4.0 / 3.0 * inv_h2);
                }
                if i + 2 < n {
                    a.set(i, 2, 1.0 / 12.0 * inv_h2);
                }
            }
        }
    }
    (a, x, h)
}

/// Eigenpairs of the trap with grid bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBasis {
    /// Trap exponent; `f64::INFINITY` denotes the Dirichlet box.
    pub s_exponent: f64,
    pub eigenvalues: Vec<f64>,
    /// `eigenfunctions[j][i] = u_j(x_i)`, normalized so that `Σ_i u_j(x_i)² w_i = 1`.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub grid: GridSpec,
    /// Two-grid estimate of each eigenvalue's discretization error.
    pub discretization_errors: Vec<f64>,
}

impl SpectralBasis {
    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn points(&self) -> Vec<f64> {
        self.grid.points(self.s_exponent).0
    }

    pub fn spacing(&self) -> f64 {
        self.grid.points(self.s_exponent).1
    }

    pub fn quad_weights(&self) -> Vec<f64> {
        vec![self.spacing(); self.grid.n_points]
    }

    pub fn is_box(&self) -> bool {
        self.s_exponent.is_infinite()
    }

    /// Weyl exponent `γ` in `#{λ_j ≤ Λ} ~ Λ^γ`.
    pub fn weyl_exponent(&self) -> f64 {
        weyl_exponent(self.s_exponent)
    }

    /// Number of modes with `λ_j ≤ cutoff`.
    pub fn count_below(&self, cutoff: f64) -> usize {
        self.eigenvalues.iter().take_while(|&&l| l <= cutoff).count()
    }

    /// The first `d` modes as a smaller basis.
    pub fn truncated(&self, d: usize) -> Result<SpectralBasis> {
        if d == 0 || d > self.n_modes() {
            return Err(precondition(format!("cannot truncate {} modes to {d}", self.n_modes())));
        }
        Ok(SpectralBasis {
            s_exponent: self.s_exponent,
            eigenvalues: self.eigenvalues[..d].to_vec(),
            eigenfunctions: self.eigenfunctions[..d].to_vec(),
            grid: self.grid,
            discretization_errors: self.discretization_errors[..d].to_vec(),
        })
    }
}

pub fn weyl_exponent(s_exponent: f64) -> f64 {
    if s_exponent.is_infinite() {
        0.5
    } else {
        0.5 + 1.0 / s_exponent
    }
}

const INVERSE_ITERATIONS: usize = 3;
const RESIDUAL_TOLERANCE: f64 = 1e-6;

/// Solve for the lowest `n_modes` eigenpairs of the trap on `grid`.
pub fn solve_spectrum(s_exponent: f64, grid: GridSpec, n_modes: usize) -> Result<SpectralBasis> {
    check_exponent(s_exponent)?;
    grid.validate()?;
    if n_modes == 0 || n_modes > grid.n_points / 4 {
        return Err(precondition(format!(
            "{n_modes} modes requested but a {}-point grid resolves at most {}",
            grid.n_points,
            grid.n_points / 4
        )));
    }
    let (a, _, h) = assemble(s_exponent, &grid);
    let n = grid.n_points;
    let mut eigenvalues = Vec::with_capacity(n_modes);
    let mut eigenfunctions: Vec<Vec<f64>> = Vec::with_capacity(n_modes);
    for k in 0..n_modes {
        let lambda = a.eigenvalue(k);
        let lu = a.factor_shifted(lambda);
        let mut v: Vec<f64> = (0..n)
            .map(|i| {
                let t = (i as f64 + 1.0) * (k as f64 + 1.0);
                1.0 + 0.5 * (0.7548776662 * t).fract() - 0.25
            })
            .collect();
        for _ in 0..INVERSE_ITERATIONS {
            v = lu.solve(&v);
            for prev in &eigenfunctions {
                let dot: f64 = prev.iter().zip(&v).map(|(p, x)| p * x).sum::<f64>() * h;
                for (x, p) in v.iter_mut().zip(prev) {
                    *x -= dot * p;
                }
            }
            let norm = (v.iter().map(|x| x * x).sum::<f64>() * h).sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(Error::NonConvergence { mode: k + 1, residual: f64::NAN });
            }
            v.iter_mut().for_each(|x| *x /= norm);
        }
        let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let first = v.iter().find(|x| x.abs() > 1e-3 * peak).copied().unwrap_or(1.0);
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let av = a.matvec(&v);
        let residual = (av.iter().zip(&v).map(|(y, x)| (y - lambda * x).powi(2)).sum::<f64>() * h).sqrt();
        if !(residual <= RESIDUAL_TOLERANCE * lambda.abs()) {
            return Err(Error::NonConvergence { mode: k + 1, residual });
        }
        eigenvalues.push(lambda);
        eigenfunctions.push(v);
    }
    if eigenvalues[0] <= 0.0 {
        return Err(Error::Internal(format!("nonpositive ground eigenvalue {}", eigenvalues[0])));
    }
    let coarse = GridSpec { n_points: (n - 1) / 2, ..grid };
    let (ac, _, _) = assemble(s_exponent, &coarse);
    let richardson = 2f64.powi(grid.scheme.order()) - 1.0;
    let discretization_errors = (0..n_modes)
        .map(|k| (eigenvalues[k] - ac.eigenvalue(k)).abs() / richardson)
        .collect();
    Ok(SpectralBasis { s_exponent, eigenvalues, eigenfunctions, grid, discretization_errors })
}

/// Which grid points to synthesize a field on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointSelector {
    All,
    /// Every `k`-th interior point, starting at the first.
    Stride(usize),
    Indices(Vec<usize>),
}

impl PointSelector {
    pub fn indices(&self, n: usize) -> Vec<usize> {
        match self {
            PointSelector::All => (0..n).collect(),
            PointSelector::Stride(k) => (0..n).step_by((*k).max(1)).collect(),
            PointSelector::Indices(ix) => ix.clone(),
        }
    }
}

fn check_field(basis: &SpectralBasis, field: &Field) -> Result<()> {
    if field.len() > basis.n_modes() {
        return Err(precondition(format!(
            "field has {} coefficients but the basis only {} modes",
            field.len(),
            basis.n_modes()
        )));
    }
    Ok(())
}

/// `u(x) = Σ_j α_j u_j(x)` on the selected points.
pub fn evaluate_field(basis: &SpectralBasis, field: &Field, points: &PointSelector) -> Result<Vec<Complex64>> {
    check_field(basis, field)?;
    let idx = points.indices(basis.grid.n_points);
    if let Some(&bad) = idx.iter().find(|&&i| i >= basis.grid.n_points) {
        return Err(precondition(format!("grid index {bad} out of range")));
    }
    Ok(idx
        .iter()
        .map(|&i| {
            field
                .coeffs
                .iter()
                .zip(&basis.eigenfunctions)
                .fold(Complex64::new(0.0, 0.0), |acc, (a, u)| acc + a * u[i])
        })
        .collect())
}

/// `⟨u, h u⟩ = Σ_j λ_j |α_j|²`.
pub fn kinetic_form(basis: &SpectralBasis, field: &Field) -> Result<f64> {
    check_field(basis, field)?;
    Ok(field.coeffs.iter().zip(&basis.eigenvalues).map(|(a, l)| l * a.norm_sqr()).sum())
}

/// Tail sum `Σ_{λ_j > Λ} λ_j^{-p}` with a Weyl-law remainder for unresolved modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSum {
    pub resolved: f64,
    pub remainder: f64,
}

impl TailSum {
    pub fn total(&self) -> f64 {
        self.resolved + self.remainder
    }
}

/// Fitted counting function `j(λ) ≈ c λ^γ + κ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylFit {
    pub c: f64,
    pub gamma: f64,
    pub offset: f64,
}

impl WeylFit {
    pub fn from_basis(basis: &SpectralBasis) -> Self {
        let gamma = basis.weyl_exponent();
        let offset = if basis.is_box() { 0.0 } else { 0.5 };
        let k = basis.n_modes();
        let lo = k / 2;
        let c = (lo..k)
            .map(|i| ((i + 1) as f64 - offset) / basis.eigenvalues[i].powf(gamma))
            .sum::<f64>()
            / (k - lo) as f64;
        Self { c, gamma, offset }
    }

    /// Eigenvalue position of (possibly fractional) mode index `j`.
    pub fn eigenvalue_at(&self, j: f64) -> f64 {
        ((j - self.offset) / self.c).powf(1.0 / self.gamma)
    }
}

pub fn tail_sum(basis: &SpectralBasis, cutoff: f64, power: f64) -> Result<TailSum> {
    if !(power >= 1.0) {
        return Err(precondition(format!("tail power must be at least 1, got {power}")));
    }
    let top = *basis.eigenvalues.last().expect("basis has modes");
    if cutoff > top {
        return Err(precondition(format!("cutoff {cutoff} exceeds the largest resolved eigenvalue {top}")));
    }
    let fit = WeylFit::from_basis(basis);
    if power <= fit.gamma {
        return Err(precondition(format!("tail sum diverges for power {power} ≤ {}", fit.gamma)));
    }
    let resolved = basis.eigenvalues.iter().filter(|&&l| l > cutoff).map(|l| l.powf(-power)).sum();
    let start = fit.eigenvalue_at(basis.n_modes() as f64 + 0.5);
    let remainder = fit.c * fit.gamma * start.powf(fit.gamma - power) / (power - fit.gamma);
    Ok(TailSum { resolved, remainder })
}

/// Least-squares slope of `log j` against `log λ_j` over `j ∈ [max(4, K/4), K]`.
pub fn counting_law_slope(eigenvalues: &[f64]) -> Result<f64> {
    let k = eigenvalues.len();
    let lo = (k / 4).max(4);
    if k < lo + 2 {
        return Err(precondition(format!("need more than {} eigenvalues for a slope fit", lo + 1)));
    }
    let pts: Vec<(f64, f64)> = (lo..=k).map(|j| (eigenvalues[j - 1].ln(), (j as f64).ln())).collect();
    Ok(crate::stats::linear_fit(&pts).slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn box_grid(n: usize, scheme: Scheme) -> GridSpec {
        GridSpec::new(1.0, n, scheme)
    }

    #[test]
    fn box_ground_states() {
        let b = solve_spectrum(f64::INFINITY, box_grid(512, Scheme::FiniteDifferenceOrder4), 2).unwrap();
        assert!((b.eigenvalues[0] - PI * PI).abs() < 1e-6);
        assert!((b.eigenvalues[1] - 4.0 * PI * PI).abs() < 1e-5);
        assert!(b.discretization_errors[1] < 1e-4);
    }

    #[test]
    fn eigenfunctions_are_orthonormal() {
        let b = solve_spectrum(8.0, GridSpec::new(3.0, 400, Scheme::FiniteDifferenceOrder4), 30).unwrap();
        let h = b.spacing();
        for i in 0..30 {
            for j in 0..30 {
                let dot: f64 = b.eigenfunctions[i].iter().zip(&b.eigenfunctions[j]).map(|(a, c)| a * c).sum::<f64>() * h;
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-8, "{i} {j} {dot}");
            }
        }
        assert!(b.eigenvalues.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_too_many_modes_and_small_grids() {
        assert!(matches!(
            solve_spectrum(8.0, GridSpec::new(3.0, 128, Scheme::FiniteDifferenceOrder2), 33),
            Err(Error::Precondition(_))
        ));
        assert!(solve_spectrum(8.0, GridSpec::new(3.0, 32, Scheme::FiniteDifferenceOrder2), 4).is_err());
        assert!(solve_spectrum(2.0, GridSpec::new(3.0, 128, Scheme::FiniteDifferenceOrder2), 4).is_err());
    }

    #[test]
    fn tail_beyond_resolved_range_is_pure_remainder() {
        let b = solve_spectrum(f64::INFINITY, box_grid(256, Scheme::FiniteDifferenceOrder4), 20).unwrap();
        let top = *b.eigenvalues.last().unwrap();
        let t = tail_sum(&b, top, 1.0).unwrap();
        assert_eq!(t.resolved, 0.0);
        // Σ_{j>20} 1/(πj)² ≈ 1/(π² · 20.5)
        assert!((t.remainder - 1.0 / (PI * PI * 20.5)).abs() < 1e-4);
        assert!(tail_sum(&b, top * 1.01, 1.0).is_err());
    }
}
