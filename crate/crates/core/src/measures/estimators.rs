//! Moments, density matrices, partition ratios, entropies, and tail estimates
//! computed from sample batches.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::InteractionKernel;
use super::potential::InteractionPotential;
use super::{check_weights, sample_measure, MeasureKind, MeasureSpec, SampleBatch, SamplerOptions, SphereConvention};
use crate::error::{precondition, Error, Result};
use crate::field::Field;
use crate::spectral::SpectralBasis;
use crate::stats::{logsumexp, weighted_mean, Estimate};

const MIN_ESS: f64 = 100.0;
const MAX_DM_DIM: usize = 4096;

fn batch_ranges(n: usize, batches: usize) -> Vec<std::ops::Range<usize>> {
    let b = batches.min(n).max(1);
    let size = n / b;
    (0..b).map(|i| i * size..if i + 1 == b { n } else { (i + 1) * size }).collect()
}

fn spread(values: &[f64]) -> f64 {
    let k = values.len();
    if k < 2 {
        return f64::NAN;
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / ((k - 1) * k) as f64).sqrt()
}

/// Monte Carlo estimate of `∫ |u^{⊗k}⟩⟨u^{⊗k}| dμ` in the mode basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrixEstimate {
    pub order: usize,
    pub matrix: DMatrix<Complex64>,
    pub stderr: DMatrix<f64>,
    pub n_samples: usize,
    pub ess: f64,
}

impl DensityMatrixEstimate {
    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn hermitian_residual(&self) -> f64 {
        let m = &self.matrix;
        (m - m.adjoint()).iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn tensor_vector(coeffs: &[Complex64], k: usize) -> Vec<Complex64> {
    match k {
        1 => coeffs.to_vec(),
        _ => coeffs.iter().flat_map(|a| coeffs.iter().map(move |b| a * b)).collect(),
    }
}

/// Self-normalized estimate of the `k`-th density matrix with batch-means errors.
pub fn estimate_dm(batch: &SampleBatch, k: usize) -> Result<DensityMatrixEstimate> {
    if !(k == 1 || k == 2) {
        return Err(precondition(format!("density matrix order must be 1 or 2, got {k}")));
    }
    if batch.is_empty() {
        return Err(precondition("empty batch"));
    }
    if batch.ess < MIN_ESS {
        return Err(Error::HeavyTail { ess: batch.ess, threshold: MIN_ESS });
    }
    let d = batch.fields[0].len();
    let dim = d.pow(k as u32);
    if dim > MAX_DM_DIM {
        return Err(precondition(format!("density matrix of dimension {dim} exceeds {MAX_DM_DIM}")));
    }
    let w = batch.relative_weights();
    let ranges = batch_ranges(batch.len(), batch.error_batches());
    // Per-batch weighted sums of v v^† (upper triangle filled, then mirrored).
    let partial: Vec<(DMatrix<Complex64>, f64)> = ranges
        .par_iter()
        .map(|r| {
            let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
            let mut sw = 0.0;
            for i in r.clone() {
                if w[i] == 0.0 {
                    continue;
                }
                sw += w[i];
                let v = tensor_vector(&batch.fields[i].coeffs, k);
                for a in 0..dim {
                    let va = v[a] * w[i];
                    for b in a..dim {
                        acc[(a, b)] += va * v[b].conj();
                    }
                }
            }
            for a in 0..dim {
                acc[(a, a)].im = 0.0;
                for b in a + 1..dim {
                    acc[(b, a)] = acc[(a, b)].conj();
                }
            }
            (acc, sw)
        })
        .collect();
    let total_w: f64 = partial.iter().map(|p| p.1).sum();
    let mut matrix = DMatrix::<Complex64>::zeros(dim, dim);
    for (m, _) in &partial {
        matrix += m;
    }
    matrix /= Complex64::new(total_w, 0.0);
    let means: Vec<DMatrix<Complex64>> = partial
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|(m, sw)| m / Complex64::new(*sw, 0.0))
        .collect();
    let stderr = DMatrix::from_fn(dim, dim, |a, b| {
        let re: Vec<f64> = means.iter().map(|m| m[(a, b)].re).collect();
        let im: Vec<f64> = means.iter().map(|m| m[(a, b)].im).collect();
        spread(&re).hypot(spread(&im))
    });
    Ok(DensityMatrixEstimate { order: k, matrix, stderr, n_samples: batch.len(), ess: batch.ess })
}

/// Weighted means of `|α_j|²` for every mode.
pub fn mode_moments(batch: &SampleBatch) -> Vec<Estimate> {
    let w = batch.relative_weights();
    let d = batch.fields.first().map_or(0, |f| f.len());
    (0..d)
        .map(|j| {
            let x: Vec<f64> = batch.fields.iter().map(|f| f.coeffs[j].norm_sqr()).collect();
            weighted_mean(&x, &w, batch.error_batches())
        })
        .collect()
}

/// First and second moments of the mode masses `x_j = |α_j|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCovariance {
    pub mean: Vec<Estimate>,
    /// `E[x_j x_k]`.
    pub second: Vec<Vec<Estimate>>,
    /// `E[x_j x_k] − E[x_j] E[x_k]` with a batch-means error.
    pub covariance: Vec<Vec<Estimate>>,
}

pub fn mode_covariance(batch: &SampleBatch) -> ModeCovariance {
    let w = batch.relative_weights();
    let d = batch.fields.first().map_or(0, |f| f.len());
    let x: Vec<Vec<f64>> = batch.fields.iter().map(|f| f.mode_masses()).collect();
    let ranges = batch_ranges(x.len(), batch.error_batches());
    let mean = mode_moments(batch);
    let mut second = vec![vec![Estimate::exact(0.0); d]; d];
    let mut covariance = vec![vec![Estimate::exact(0.0); d]; d];
    for j in 0..d {
        for k in 0..d {
            let prod: Vec<f64> = x.iter().map(|v| v[j] * v[k]).collect();
            second[j][k] = weighted_mean(&prod, &w, batch.error_batches());
            let per_batch: Vec<f64> = ranges
                .iter()
                .map(|r| {
                    let sw: f64 = w[r.clone()].iter().sum();
                    let m = |f: &dyn Fn(usize) -> f64| r.clone().map(|i| w[i] * f(i)).sum::<f64>() / sw;
                    m(&|i| x[i][j] * x[i][k]) - m(&|i| x[i][j]) * m(&|i| x[i][k])
                })
                .collect();
            covariance[j][k] =
                Estimate::new(second[j][k].value - mean[j].value * mean[k].value, spread(&per_batch));
        }
    }
    ModeCovariance { mean, second, covariance }
}

/// `E(u) = a⟨u,hu⟩ + b F(u)` of a sphere-type spec, with `kernel` built for its potential.
pub fn spec_energy(spec: &MeasureSpec, basis: &SpectralBasis, kernel: &InteractionKernel, field: &Field) -> f64 {
    let (a, b) = spec.energy_scales();
    let kinetic: f64 = field.coeffs.iter().zip(&basis.eigenvalues).map(|(z, l)| l * z.norm_sqr()).sum();
    let mut e = a * kinetic;
    if b != 0.0 && !kernel.is_none() {
        e += b * kernel.energy(&field.coeffs);
    }
    e
}

fn kernel_for(spec: &MeasureSpec, basis: &SpectralBasis, stride: usize) -> Result<InteractionKernel> {
    match &spec.potential {
        Some(w) if spec.g_value() != 0.0 => InteractionKernel::build(basis, spec.modes, w, stride),
        _ => Ok(InteractionKernel::None),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativePartition {
    pub estimate: Estimate,
    pub ess: f64,
}

impl RelativePartition {
    /// `−log z^r` with a delta-method error.
    pub fn neg_log(&self) -> Estimate {
        Estimate::new(-self.estimate.value.ln(), self.estimate.stderr / self.estimate.value)
    }
}

/// `z^r_m = E[exp(−(g/2m) F(u))]` over a non-interacting mass-conditioned batch.
pub fn classical_relative_partition(
    batch: &SampleBatch,
    g: f64,
    m: f64,
    potential: &InteractionPotential,
    basis: &SpectralBasis,
    opts: &SamplerOptions,
) -> Result<RelativePartition> {
    if !matches!(batch.spec.kind, MeasureKind::Conditioned | MeasureKind::Sphere) || batch.spec.g_value() != 0.0 {
        return Err(precondition("relative partition needs a conditioned or sphere batch with g = 0"));
    }
    if batch.spec.m.is_some_and(|bm| (bm - m).abs() > 1e-12 * m) {
        return Err(precondition(format!("batch mass {:?} differs from m = {m}", batch.spec.m)));
    }
    if g == 0.0 || potential.is_zero() {
        return Ok(RelativePartition { estimate: Estimate::exact(1.0), ess: batch.ess });
    }
    let scale = match (batch.spec.kind, batch.spec.convention) {
        (MeasureKind::Sphere, SphereConvention::Unit) => 0.5 * g * m,
        _ => 0.5 * g / m,
    };
    let kernel = InteractionKernel::build(basis, batch.fields[0].len(), potential, opts.grid_stride)?;
    let log_terms: Vec<f64> = batch.fields.par_iter().map(|f| -scale * kernel.energy(&f.coeffs)).collect();
    let combined: Vec<f64> = log_terms.iter().zip(&batch.log_weights).map(|(a, b)| a + b).collect();
    let ess = check_weights(&combined, opts.strict)?;
    let w = batch.normalized_weights();
    let values: Vec<f64> = log_terms.iter().map(|l| l.exp()).collect();
    Ok(RelativePartition { estimate: weighted_mean(&values, &w, batch.error_batches()), ess })
}

fn weighted_log_mean_exp(values: &[f64], log_weights: &[f64]) -> f64 {
    let num: Vec<f64> = values.iter().zip(log_weights).map(|(v, w)| v + w).collect();
    logsumexp(&num) - logsumexp(log_weights)
}

fn weighted_plain_mean(values: &[f64], log_weights: &[f64]) -> f64 {
    let w = crate::stats::relative_weights(log_weights);
    values.iter().zip(&w).map(|(v, w)| v * w).sum::<f64>() / w.iter().sum::<f64>()
}

fn sphere_support(spec: &MeasureSpec) -> Result<(usize, f64)> {
    if spec.kind != MeasureKind::Sphere {
        return Err(precondition("relative entropy is defined between sphere measures"));
    }
    let r2 = spec.radius2().ok_or_else(|| precondition("sphere spec without mass"))?;
    Ok((spec.modes, r2))
}

/// `H(ν, σ) = E_ν[log dν/dσ]` between two sphere measures on the same support.
///
/// With `D = E_ν − E_σ`, `log dν/dσ = −D − log(z_ν/z_σ)`. The normalization
/// ratio is `1/E_ν[e^{D}]` from the numerator batch, or `E_σ[e^{−D}]` from
/// `denominator_batch` when one is given.
pub fn classical_relative_entropy(
    numerator_batch: &SampleBatch,
    numerator_spec: &MeasureSpec,
    denominator_spec: &MeasureSpec,
    denominator_batch: Option<&SampleBatch>,
    basis: &SpectralBasis,
    opts: &SamplerOptions,
) -> Result<Estimate> {
    let (dn, rn) = sphere_support(numerator_spec)?;
    let (ds, rs) = sphere_support(denominator_spec)?;
    if dn != ds || (rn - rs).abs() > 1e-12 * rn.max(rs) {
        return Err(precondition(format!(
            "measures live on different spheres ({dn} modes, r² = {rn} vs {ds} modes, r² = {rs})"
        )));
    }
    let kn = kernel_for(numerator_spec, basis, opts.grid_stride)?;
    let ks = kernel_for(denominator_spec, basis, opts.grid_stride)?;
    let diff = |b: &SampleBatch| -> Vec<f64> {
        b.fields
            .par_iter()
            .map(|f| spec_energy(numerator_spec, basis, &kn, f) - spec_energy(denominator_spec, basis, &ks, f))
            .collect()
    };
    let dnum = diff(numerator_batch);
    let neg: Vec<f64> = dnum.iter().map(|x| -x).collect();
    let ranges = batch_ranges(dnum.len(), numerator_batch.error_batches());
    let lw = &numerator_batch.log_weights;
    match denominator_batch {
        None => {
            let h = |r: std::ops::Range<usize>| {
                weighted_plain_mean(&neg[r.clone()], &lw[r.clone()]) + weighted_log_mean_exp(&dnum[r.clone()], &lw[r])
            };
            let per: Vec<f64> = ranges.iter().map(|r| h(r.clone())).collect();
            Ok(Estimate::new(h(0..dnum.len()), spread(&per)))
        }
        Some(den) => {
            let dden: Vec<f64> = diff(den).iter().map(|x| -x).collect();
            let lwd = &den.log_weights;
            let first = weighted_plain_mean(&neg, lw);
            let second = weighted_log_mean_exp(&dden, lwd);
            let per1: Vec<f64> = ranges.iter().map(|r| weighted_plain_mean(&neg[r.clone()], &lw[r.clone()])).collect();
            let per2: Vec<f64> = batch_ranges(dden.len(), den.error_batches())
                .iter()
                .map(|r| weighted_log_mean_exp(&dden[r.clone()], &lwd[r.clone()]))
                .collect();
            Ok(Estimate::new(first - second, spread(&per1).hypot(spread(&per2))))
        }
    }
}

/// Kinetic-energy shift between two unit-sphere measures.
#[derive(Debug, Clone, PartialEq)]
pub struct MassGap {
    pub delta: Estimate,
    pub kinetic_reference: Estimate,
    pub kinetic_target: Estimate,
    pub reference: SampleBatch,
    pub target: SampleBatch,
}

/// `Δ = ⟨⟨u,hu⟩⟩_{ρ_{m1,0}} − ⟨⟨u,hu⟩⟩_{ρ_{m2,g}}` from two independent unit-sphere chains.
#[allow(clippy::too_many_arguments)]
pub fn delta_mass_gap(
    basis: &SpectralBasis,
    modes: usize,
    m1: f64,
    m2: f64,
    g: f64,
    potential: &InteractionPotential,
    n: usize,
    seed: u64,
    opts: &SamplerOptions,
) -> Result<MassGap> {
    if !(m1 > 0.0 && m1 <= m2) {
        return Err(precondition(format!("need 0 < m1 ≤ m2, got {m1}, {m2}")));
    }
    let reference_spec = MeasureSpec::sphere(modes, m1, SphereConvention::Unit);
    let target_spec = if g == 0.0 {
        MeasureSpec::sphere(modes, m2, SphereConvention::Unit)
    } else {
        MeasureSpec::sphere_interacting(modes, m2, g, potential.clone(), SphereConvention::Unit)
    };
    let reference = sample_measure(&reference_spec, basis, n, seed, opts, None)?;
    let target = sample_measure(&target_spec, basis, n, seed.wrapping_add(0x9e37_79b9), opts, None)?;
    let kinetic = |b: &SampleBatch| {
        let k: Vec<f64> =
            b.fields.iter().map(|f| f.coeffs.iter().zip(&basis.eigenvalues).map(|(z, l)| l * z.norm_sqr()).sum()).collect();
        weighted_mean(&k, &b.relative_weights(), b.error_batches())
    };
    let k1 = kinetic(&reference);
    let k2 = kinetic(&target);
    Ok(MassGap {
        delta: Estimate::new(k1.value - k2.value, k1.stderr.hypot(k2.stderr)),
        kinetic_reference: k1,
        kinetic_target: k2,
        reference,
        target,
    })
}

/// `‖Σ_{j ≥ from} α_j u_j‖_{L⁴}` for each sample, on every `stride`-th grid point.
pub fn l4_norms(batch: &SampleBatch, basis: &SpectralBasis, from_mode: usize, stride: usize) -> Vec<f64> {
    let stride = stride.max(1);
    let h = basis.spacing() * stride as f64;
    let rows: Vec<Vec<f64>> =
        basis.eigenfunctions.iter().map(|u| u.iter().step_by(stride).copied().collect()).collect();
    let n = rows[0].len();
    batch
        .fields
        .par_iter()
        .map(|f| {
            let mut u = vec![Complex64::new(0.0, 0.0); n];
            for (a, row) in f.coeffs.iter().zip(&rows).skip(from_mode) {
                for (ui, r) in u.iter_mut().zip(row) {
                    *ui += a * r;
                }
            }
            (h * u.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>()).powf(0.25)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailProbability {
    pub probability: Estimate,
    pub hits: usize,
    /// True when no sample exceeded the threshold; `probability.value` is then
    /// the rule-of-three upper bound `3/n`.
    pub one_sided: bool,
}

/// Fraction of weighted samples with norm above `r`.
pub fn tail_fraction(norms: &[f64], log_weights: &[f64], r: f64, batches: usize) -> TailProbability {
    let w = crate::stats::relative_weights(log_weights);
    let hits = norms.iter().filter(|&&x| x > r).count();
    if hits == 0 {
        let n = norms.len() as f64;
        return TailProbability { probability: Estimate::new(3.0 / n, 0.0), hits, one_sided: true };
    }
    let ind: Vec<f64> = norms.iter().map(|&x| if x > r { 1.0 } else { 0.0 }).collect();
    let mut est = weighted_mean(&ind, &w, batches);
    if !est.stderr.is_finite() || est.stderr == 0.0 {
        est.stderr = (est.value * (1.0 - est.value) / norms.len() as f64).sqrt();
    }
    TailProbability { probability: est, hits, one_sided: false }
}

/// `μ_{0,m}(‖P^⊥ u‖_{L⁴} > r)` with `P^⊥` projecting onto modes `cut_modes..K`,
/// sampled on the full resolved cutoff.
#[allow(clippy::too_many_arguments)]
pub fn l4_tail_probability(
    basis: &SpectralBasis,
    cut_modes: usize,
    r: f64,
    m: f64,
    n: usize,
    seed: u64,
    opts: &SamplerOptions,
    stride: usize,
) -> Result<TailProbability> {
    if cut_modes >= basis.n_modes() {
        return Err(precondition("cutoff leaves no resolved modes above it"));
    }
    let spec = MeasureSpec::conditioned(basis.n_modes(), m);
    let batch = sample_measure(&spec, basis, n, seed, opts, None)?;
    let norms = l4_norms(&batch, basis, cut_modes, stride);
    Ok(tail_fraction(&norms, &batch.log_weights, r, batch.error_batches()))
}

/// `E[exp(‖u‖⁴_{L⁴})]` over a batch.
pub fn exp_l4_moment(batch: &SampleBatch, basis: &SpectralBasis, stride: usize) -> Estimate {
    let norms = l4_norms(batch, basis, 0, stride);
    let values: Vec<f64> = norms.iter().map(|x| x.powi(4).exp()).collect();
    weighted_mean(&values, &batch.relative_weights(), batch.error_batches())
}
