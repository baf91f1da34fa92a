//! Classical field measures on the span of the first `d` eigenmodes: the free
//! Gaussian, its mass-penalized and mass-conditioned versions, sphere measures
//! with an optional pair interaction, and the reweighted interacting measure.

mod estimators;
mod io;
mod kernel;
mod potential;
mod sampler;

pub use estimators::{
    classical_relative_entropy, classical_relative_partition, delta_mass_gap, estimate_dm, exp_l4_moment,
    l4_norms, l4_tail_probability, mode_covariance, mode_moments, spec_energy, tail_fraction, DensityMatrixEstimate,
    MassGap, ModeCovariance, RelativePartition, TailProbability,
};
pub use io::{decode_batch, encode_batch, read_batch, write_batch, write_batch_csv, BATCH_FORMAT_VERSION, BATCH_MAGIC};
pub use kernel::{interaction_energy, GridConvolver, InteractionKernel, PairTensor, TENSOR_MAX_MODES};
pub use potential::{InteractionPotential, LpNorm, Part, PotentialKind};
pub use sampler::{check_acceptance, run_chain, uniform_sphere_point, ChainSettings, SphereTarget};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::field::Field;
use crate::massdist::MassDensity;
use crate::rng::{complex_gaussian, stream_rng};
use crate::spectral::SpectralBasis;
use crate::stats::{effective_sample_size, max_weight_fraction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    FreeGaussian,
    Penalized,
    Conditioned,
    Sphere,
    Interacting,
}

/// How the sphere measures normalize the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereConvention {
    /// `‖u‖ = 1`, density `exp(−m⟨u,hu⟩ − (g m/2) F(u))`.
    Unit,
    /// `‖u‖² = m`, density `exp(−⟨u,hu⟩ − (g/2m) F(u))`.
    Radius,
}

/// Which measure to sample, on the first `modes` eigenmodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub modes: usize,
    pub m: Option<f64>,
    pub eps: Option<f64>,
    pub g: Option<f64>,
    pub potential: Option<InteractionPotential>,
    pub convention: SphereConvention,
}

impl MeasureSpec {
    pub fn free_gaussian(modes: usize) -> Self {
        Self { kind: MeasureKind::FreeGaussian, modes, m: None, eps: None, g: None, potential: None, convention: SphereConvention::Radius }
    }

    pub fn penalized(modes: usize, m: f64, eps: f64) -> Self {
        Self { kind: MeasureKind::Penalized, m: Some(m), eps: Some(eps), ..Self::free_gaussian(modes) }
    }

    pub fn conditioned(modes: usize, m: f64) -> Self {
        Self { kind: MeasureKind::Conditioned, m: Some(m), ..Self::free_gaussian(modes) }
    }

    pub fn sphere(modes: usize, m: f64, convention: SphereConvention) -> Self {
        Self { kind: MeasureKind::Sphere, m: Some(m), convention, ..Self::free_gaussian(modes) }
    }

    pub fn sphere_interacting(
        modes: usize,
        m: f64,
        g: f64,
        potential: InteractionPotential,
        convention: SphereConvention,
    ) -> Self {
        Self { g: Some(g), potential: Some(potential), ..Self::sphere(modes, m, convention) }
    }

    pub fn interacting(modes: usize, m: f64, g: f64, potential: InteractionPotential) -> Self {
        Self {
            kind: MeasureKind::Interacting,
            m: Some(m),
            g: Some(g),
            potential: Some(potential),
            ..Self::free_gaussian(modes)
        }
    }

    /// Mode count of the cutoff `Λ`: modes with `λ_j ≤ Λ`.
    pub fn modes_below(basis: &SpectralBasis, cutoff: f64) -> usize {
        basis.count_below(cutoff)
    }

    pub fn g_value(&self) -> f64 {
        self.g.unwrap_or(0.0)
    }

    fn require_m(&self) -> Result<f64> {
        match self.m {
            Some(m) if m > 0.0 && m.is_finite() => Ok(m),
            _ => Err(precondition(format!("{:?} measure needs a positive mass", self.kind))),
        }
    }

    pub fn validate(&self, basis: &SpectralBasis) -> Result<()> {
        if self.modes == 0 || self.modes > basis.n_modes() {
            return Err(precondition(format!("cutoff of {} modes outside the basis ({} modes)", self.modes, basis.n_modes())));
        }
        let has = (self.m.is_some(), self.eps.is_some(), self.g.is_some());
        let ok = match self.kind {
            MeasureKind::FreeGaussian => has == (false, false, false),
            MeasureKind::Penalized => has == (true, true, false),
            MeasureKind::Conditioned => has == (true, false, false),
            MeasureKind::Sphere => has.0 && !has.1,
            MeasureKind::Interacting => has == (true, false, true),
        };
        if !ok {
            return Err(precondition(format!("parameters do not match the {:?} measure", self.kind)));
        }
        if self.m.is_some() {
            self.require_m()?;
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0) {
                return Err(precondition(format!("penalty width must be positive, got {eps}")));
            }
        }
        if self.g.is_some_and(|g| g != 0.0) && self.potential.is_none() {
            return Err(precondition("a nonzero coupling needs a potential"));
        }
        Ok(())
    }

    /// Radius² of the sphere the fields live on (sphere-type kinds).
    pub fn radius2(&self) -> Option<f64> {
        match self.kind {
            MeasureKind::Sphere | MeasureKind::Interacting => Some(match self.convention {
                SphereConvention::Unit => 1.0,
                SphereConvention::Radius => self.m?,
            }),
            MeasureKind::Conditioned => self.m,
            _ => None,
        }
    }

    /// Coefficients `(a, b)` of `E = a⟨u,hu⟩ + b F(u)` for sphere-type kinds.
    pub fn energy_scales(&self) -> (f64, f64) {
        let m = self.m.unwrap_or(1.0);
        let g = self.g_value();
        match self.convention {
            SphereConvention::Unit => (m, 0.5 * g * m),
            SphereConvention::Radius => (1.0, 0.5 * g / m),
        }
    }
}

/// Options for the Markov chain kinds and the importance-weight guards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerOptions {
    pub chains: usize,
    /// Burn-in length in units of `thinning` moves.
    pub burn_in_sweeps: usize,
    /// Moves between recorded samples; `None` uses the mode count.
    pub thinning: Option<usize>,
    pub initial_step: f64,
    pub strict: bool,
    /// Grid stride used by the FFT interaction route.
    pub grid_stride: usize,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self { chains: 8, burn_in_sweeps: 500, thinning: None, initial_step: 0.3, strict: false, grid_stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub fields: Vec<Field>,
    pub log_weights: Vec<f64>,
    pub seed: u64,
    pub spec: MeasureSpec,
    pub ess: f64,
    pub acceptance_rate: Option<f64>,
    /// Independent Markov chains the samples came from, stored one after
    /// another; 0 for independent draws.
    pub chains: usize,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Batch count for batch-means errors. Chain output is split one batch
    /// per chain so that autocorrelation stays inside a batch.
    pub fn error_batches(&self) -> usize {
        if self.chains >= 2 {
            self.chains
        } else {
            crate::stats::DEFAULT_BATCHES
        }
    }

    /// Weights scaled to a maximum of one.
    pub fn relative_weights(&self) -> Vec<f64> {
        crate::stats::relative_weights(&self.log_weights)
    }

    /// Self-normalized weights summing to one.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let w = self.relative_weights();
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    }
}

const HEAVY_TAIL_FRACTION: f64 = 0.01;
const MAX_WEIGHT_FRACTION: f64 = 0.1;

/// ESS and weight-concentration guards shared by the weighted kinds.
pub(crate) fn check_weights(log_weights: &[f64], strict: bool) -> Result<f64> {
    let n = log_weights.len() as f64;
    let ess = effective_sample_size(log_weights);
    if ess < HEAVY_TAIL_FRACTION * n {
        if strict {
            return Err(Error::HeavyTail { ess, threshold: HEAVY_TAIL_FRACTION * n });
        }
        warn!("effective sample size {ess:.1} of {n} draws: heavy-tailed weights");
    }
    if strict {
        let fraction = max_weight_fraction(log_weights);
        if fraction > MAX_WEIGHT_FRACTION {
            return Err(Error::WeightConcentration { fraction });
        }
    }
    Ok(ess)
}

fn free_draws(rates: &[f64], n: usize, seed: u64) -> Vec<Field> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            Field::new(rates.iter().map(|l| complex_gaussian(&mut rng, 1.0 / l)).collect())
        })
        .collect()
}

/// Chain stream ids live above the per-sample ids.
const CHAIN_STREAM_BASE: u64 = 1 << 40;

/// Pooled sphere-chain samples for the sphere-type measure `spec` with the given kernel.
pub fn sample_sphere(
    spec: &MeasureSpec,
    basis: &SpectralBasis,
    kernel: &InteractionKernel,
    n: usize,
    seed: u64,
    opts: &SamplerOptions,
) -> Result<(Vec<Field>, f64)> {
    let d = spec.modes;
    let rates = &basis.eigenvalues[..d];
    let (a, b) = spec.energy_scales();
    let radius2 = spec.radius2().ok_or_else(|| precondition("spec has no sphere radius"))?;
    let thinning = opts.thinning.unwrap_or(d).max(1);
    let settings = ChainSettings { burn_in_moves: opts.burn_in_sweeps * thinning, thinning, initial_step: opts.initial_step };
    let chains = opts.chains.clamp(1, n.max(1));
    let outputs: Vec<Result<sampler::ChainOutput>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let count = n / chains + usize::from(c < n % chains);
            let target = SphereTarget { rates, kinetic_scale: a, interaction_scale: b, kernel, radius2 };
            let mut rng = stream_rng(seed, CHAIN_STREAM_BASE + c as u64);
            run_chain(&target, settings, count, &mut rng)
        })
        .collect();
    let mut fields = Vec::with_capacity(n);
    let (mut acc, mut prop) = (0usize, 0usize);
    for out in outputs {
        let out = out?;
        fields.extend(out.samples);
        acc += out.accepted;
        prop += out.proposed;
    }
    let rate = if prop == 0 { 0.5 } else { acc as f64 / prop as f64 };
    if d >= 2 {
        check_acceptance(rate)?;
    }
    Ok((fields, rate))
}

/// Draw `n` fields from `spec`.
///
/// `high_density` is the density of the mass carried by modes beyond the
/// cutoff, required by the conditioned kind unless the cutoff covers every
/// resolved mode (then the sphere chain is used).
pub fn sample_measure(
    spec: &MeasureSpec,
    basis: &SpectralBasis,
    n: usize,
    seed: u64,
    opts: &SamplerOptions,
    high_density: Option<&MassDensity>,
) -> Result<SampleBatch> {
    spec.validate(basis)?;
    if n == 0 {
        return Err(precondition("sample count must be positive"));
    }
    let d = spec.modes;
    let rates = &basis.eigenvalues[..d];
    let (fields, log_weights, acceptance_rate) = match spec.kind {
        MeasureKind::FreeGaussian => (free_draws(rates, n, seed), vec![0.0; n], None),
        MeasureKind::Penalized => {
            let m = spec.require_m()?;
            let eps = spec.eps.unwrap();
            let fields = free_draws(rates, n, seed);
            let lw = fields.iter().map(|f| -(f.mass() - m).powi(2) / eps).collect();
            (fields, lw, None)
        }
        MeasureKind::Conditioned => {
            let m = spec.require_m()?;
            match high_density {
                Some(f_high) => {
                    let fields = free_draws(rates, n, seed);
                    let lw = fields
                        .iter()
                        .map(|f| {
                            let rest = m - f.mass();
                            if rest < 0.0 {
                                f64::NEG_INFINITY
                            } else {
                                let v = f_high.value_at(rest);
                                if v > 0.0 {
                                    v.ln()
                                } else {
                                    f64::NEG_INFINITY
                                }
                            }
                        })
                        .collect();
                    (fields, lw, None)
                }
                None if d == basis.n_modes() => {
                    let sphere = MeasureSpec::sphere(d, m, SphereConvention::Radius);
                    let (fields, rate) = sample_sphere(&sphere, basis, &InteractionKernel::None, n, seed, opts)?;
                    (fields, vec![0.0; n], Some(rate))
                }
                None => {
                    return Err(precondition(
                        "conditioned sampling below the full cutoff needs the high-mode mass density",
                    ))
                }
            }
        }
        MeasureKind::Sphere => {
            let kernel = match &spec.potential {
                Some(w) if spec.g_value() != 0.0 => InteractionKernel::build(basis, d, w, opts.grid_stride)?,
                _ => InteractionKernel::None,
            };
            let (fields, rate) = sample_sphere(spec, basis, &kernel, n, seed, opts)?;
            (fields, vec![0.0; n], Some(rate))
        }
        MeasureKind::Interacting => {
            let m = spec.require_m()?;
            let w = spec.potential.as_ref().unwrap();
            let kernel = InteractionKernel::build(basis, d, w, opts.grid_stride)?;
            let free = MeasureSpec::sphere(d, m, spec.convention);
            let (fields, rate) = sample_sphere(&free, basis, &InteractionKernel::None, n, seed, opts)?;
            let (_, b) = spec.energy_scales();
            let lw = fields.par_iter().map(|f| -b * kernel.energy(&f.coeffs)).collect();
            (fields, lw, Some(rate))
        }
    };
    if log_weights.iter().any(|w: &f64| w.is_nan() || *w == f64::INFINITY) {
        return Err(Error::Internal("non-finite importance weight".into()));
    }
    let ess = check_weights(&log_weights, opts.strict)?;
    let chains = if acceptance_rate.is_some() { opts.chains.clamp(1, n) } else { 0 };
    Ok(SampleBatch { fields, log_weights, seed, spec: spec.clone(), ess, acceptance_rate, chains })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{solve_spectrum, GridSpec, Scheme};

    fn basis() -> SpectralBasis {
        solve_spectrum(8.0, GridSpec::new(3.0, 256, Scheme::FiniteDifferenceOrder4), 6).unwrap()
    }

    #[test]
    fn spec_parameters_must_match_kind() {
        let b = basis();
        assert!(MeasureSpec::free_gaussian(4).validate(&b).is_ok());
        let mut bad = MeasureSpec::penalized(4, 1.0, 0.1);
        bad.eps = None;
        assert!(bad.validate(&b).is_err());
        assert!(MeasureSpec::free_gaussian(7).validate(&b).is_err());
        let mut g_no_w = MeasureSpec::sphere(3, 1.0, SphereConvention::Unit);
        g_no_w.g = Some(1.0);
        assert!(g_no_w.validate(&b).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let b = basis();
        let opts = SamplerOptions::default();
        let spec = MeasureSpec::sphere(4, 1.0, SphereConvention::Radius);
        let a = sample_measure(&spec, &b, 200, 5, &opts, None).unwrap();
        let c = sample_measure(&spec, &b, 200, 5, &opts, None).unwrap();
        assert_eq!(a, c);
        let f = sample_measure(&MeasureSpec::free_gaussian(4), &b, 100, 5, &opts, None).unwrap();
        assert_eq!(f.ess, 100.0);
    }

    #[test]
    fn conditioned_below_cutoff_needs_density() {
        let b = basis();
        let r = sample_measure(&MeasureSpec::conditioned(3, 1.0), &b, 10, 1, &SamplerOptions::default(), None);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
