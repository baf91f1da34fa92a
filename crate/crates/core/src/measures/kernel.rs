//! Pair interaction energy `F(u) = ∬ |u(x)|² w(x−y) |u(y)|² dx dy`.
//!
//! The grid route convolves `|u|²` with `w` by FFT; the tensor route contracts
//! precomputed mode integrals `W[i,j,k,l]`. Both use the same quadrature, so
//! they agree to rounding.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::potential::InteractionPotential;
use crate::error::{precondition, Error, Result};
use crate::field::Field;
use crate::spectral::SpectralBasis;

/// Sampled eigenfunctions on a (possibly strided) grid together with the
/// FFT of the potential on all grid offsets.
#[derive(Clone)]
pub struct GridConvolver {
    modes: Vec<Vec<f64>>,
    h: f64,
    kernel_hat: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GridConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridConvolver")
            .field("modes", &self.modes.len())
            .field("points", &self.points())
            .field("h", &self.h)
            .finish()
    }
}

impl GridConvolver {
    pub fn new(basis: &SpectralBasis, d: usize, potential: &InteractionPotential, stride: usize) -> Result<Self> {
        if d > basis.n_modes() {
            return Err(precondition(format!("{d} modes requested from a {}-mode basis", basis.n_modes())));
        }
        let stride = stride.max(1);
        let modes: Vec<Vec<f64>> = basis.eigenfunctions[..d]
            .iter()
            .map(|u| u.iter().step_by(stride).copied().collect())
            .collect();
        let n = basis.eigenfunctions[0].iter().step_by(stride).count();
        let h = basis.spacing() * stride as f64;
        let size = 2 * n;
        let mut kernel = vec![Complex64::new(0.0, 0.0); size];
        kernel[0].re = potential.value_checked(0.0)?;
        for k in 1..n {
            let v = potential.value_checked(k as f64 * h)?;
            kernel[k].re = v;
            kernel[size - k].re = potential.value_checked(-(k as f64) * h)?;
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        fwd.process(&mut kernel);
        Ok(Self { modes, h, kernel_hat: kernel, fwd, inv })
    }

    pub fn points(&self) -> usize {
        self.modes.first().map_or(0, |m| m.len())
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// `(w * f)(x_i) = Σ_j w(x_i − x_j) f_j` (no quadrature weight).
    pub fn convolve(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let size = self.kernel_hat.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for (b, v) in buf.iter_mut().zip(f) {
            b.re = *v;
        }
        self.fwd.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inv.process(&mut buf);
        buf[..n].iter().map(|c| c.re / size as f64).collect()
    }

    /// `|u(x_i)|²` for the field restricted to this convolver's modes.
    pub fn density(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let n = self.points();
        let mut u = vec![Complex64::new(0.0, 0.0); n];
        for (a, m) in coeffs.iter().zip(&self.modes) {
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            for (ui, mi) in u.iter_mut().zip(m) {
                *ui += a * mi;
            }
        }
        u.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn energy(&self, coeffs: &[Complex64]) -> f64 {
        let rho = self.density(coeffs);
        let conv = self.convolve(&rho);
        self.h * self.h * rho.iter().zip(&conv).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `∫ |u|⁴` on the same points.
    pub fn quartic(&self, coeffs: &[Complex64]) -> f64 {
        self.h * self.density(coeffs).iter().map(|r| r * r).sum::<f64>()
    }
}

/// Mode integrals `W[i,j,k,l] = ∬ u_i(x) u_j(y) w(x−y) u_k(x) u_l(y)` with the
/// symmetry residual measured before averaging.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTensor {
    pub d: usize,
    pub values: Vec<f64>,
    pub symmetry_residual: f64,
}

impl PairTensor {
    #[inline]
    pub fn index(d: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * d + j) * d + k) * d + l
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.values[Self::index(self.d, i, j, k, l)]
    }

    pub fn compute(conv: &GridConvolver) -> Self {
        let d = conv.n_modes();
        let n = conv.points();
        let h2 = conv.h * conv.h;
        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |k| (i, k))).collect();
        let products: Vec<Vec<f64>> = pairs
            .iter()
            .map(|&(i, k)| (0..n).map(|x| conv.modes[i][x] * conv.modes[k][x]).collect())
            .collect();
        let convolved: Vec<Vec<f64>> = products.iter().map(|p| conv.convolve(p)).collect();
        let mut raw = vec![0.0; d * d * d * d];
        for (a, &(i, k)) in pairs.iter().enumerate() {
            for (b, &(j, l)) in pairs.iter().enumerate() {
                let v = h2 * products[a].iter().zip(&convolved[b]).map(|(p, q)| p * q).sum::<f64>();
                for (ii, kk) in [(i, k), (k, i)] {
                    for (jj, ll) in [(j, l), (l, j)] {
                        raw[Self::index(d, ii, jj, kk, ll)] = v;
                    }
                }
            }
        }
        let mut values = raw.clone();
        let mut residual = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let orbit = [
                            raw[Self::index(d, i, j, k, l)],
                            raw[Self::index(d, j, i, l, k)],
                            raw[Self::index(d, k, l, i, j)],
                            raw[Self::index(d, l, k, j, i)],
                        ];
                        let mean = orbit.iter().sum::<f64>() / 4.0;
                        for v in orbit {
                            residual = residual.max((v - mean).abs());
                        }
                        values[Self::index(d, i, j, k, l)] = mean;
                    }
                }
            }
        }
        Self { d, values, symmetry_residual: residual }
    }

    /// `Σ W[i,j,k,l] ᾱ_i ᾱ_j α_k α_l`.
    pub fn energy(&self, coeffs: &[Complex64]) -> f64 {
        let d = self.d;
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..d {
            let ai = coeffs[i].conj();
            for k in 0..d {
                let pik = ai * coeffs[k];
                for j in 0..d {
                    let pj = pik * coeffs[j].conj();
                    let base = ((i * d + j) * d + k) * d;
                    let mut s = Complex64::new(0.0, 0.0);
                    for l in 0..d {
                        s += coeffs[l] * self.values[base + l];
                    }
                    total += pj * s;
                }
            }
        }
        total.re
    }
}

/// Largest mode count evaluated through the tensor route.
pub const TENSOR_MAX_MODES: usize = 8;

/// Evaluator of `F` on fields with a fixed number of modes.
#[derive(Debug, Clone)]
pub enum InteractionKernel {
    None,
    Tensor(PairTensor),
    Grid(GridConvolver),
}

impl InteractionKernel {
    /// Tensor route for `d ≤ 8`, FFT grid route otherwise.
    pub fn build(basis: &SpectralBasis, d: usize, potential: &InteractionPotential, stride: usize) -> Result<Self> {
        if potential.is_zero() {
            return Ok(Self::None);
        }
        let conv = GridConvolver::new(basis, d, potential, stride)?;
        if d <= TENSOR_MAX_MODES {
            let t = PairTensor::compute(&conv);
            if t.symmetry_residual > 1e-8 * t.values.iter().fold(1.0f64, |m, v| m.max(v.abs())) {
                return Err(Error::UnderResolved(format!(
                    "pair tensor symmetry residual {:.3e}",
                    t.symmetry_residual
                )));
            }
            Ok(Self::Tensor(t))
        } else {
            Ok(Self::Grid(conv))
        }
    }

    pub fn energy(&self, coeffs: &[Complex64]) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Tensor(t) => t.energy(coeffs),
            Self::Grid(g) => g.energy(coeffs),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Self::None)
    }
}

/// `F(u)` on the full basis grid via FFT convolution.
pub fn interaction_energy(field: &Field, basis: &SpectralBasis, potential: &InteractionPotential) -> Result<f64> {
    if field.len() > basis.n_modes() {
        return Err(precondition(format!(
            "field has {} coefficients but the basis only {} modes",
            field.len(),
            basis.n_modes()
        )));
    }
    if potential.is_zero() {
        return Ok(0.0);
    }
    let conv = GridConvolver::new(basis, field.len(), potential, 1)?;
    Ok(conv.energy(&field.coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{solve_spectrum, GridSpec, Scheme};

    #[test]
    fn tensor_matches_grid_energy() {
        let b = solve_spectrum(8.0, GridSpec::new(3.0, 256, Scheme::FiniteDifferenceOrder4), 4).unwrap();
        let w = InteractionPotential::gaussian_bump(0.5, 1.3).unwrap();
        let conv = GridConvolver::new(&b, 4, &w, 1).unwrap();
        let t = PairTensor::compute(&conv);
        assert!(t.symmetry_residual < 1e-12);
        let coeffs = vec![
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.2, 0.5),
            Complex64::new(0.05, -0.4),
            Complex64::new(0.7, 0.0),
        ];
        let a = t.energy(&coeffs);
        let g = conv.energy(&coeffs);
        assert!((a - g).abs() < 1e-12 * g.abs().max(1.0));
    }
}
