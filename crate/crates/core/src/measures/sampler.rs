//! Metropolis chain on a complex sphere `Σ_j |α_j|² = r²`.
//!
//! A state is a point `x` of the simplex `Σ x_j = r²` (with `x_j = |α_j|²`)
//! plus phases. Surface measure on the sphere is uniform on the simplex times
//! uniform phases, so the target density relative to that reference is
//! `exp(−E)`. A move picks two modes, writes `x_j = s cos²φ`, `x_k = s sin²φ`
//! with `s = x_j + x_k` fixed, perturbs `φ` by a reflected uniform step and
//! both phases by a uniform step, and corrects for the `sin 2φ` Jacobian.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::kernel::InteractionKernel;
use crate::error::{Error, Result};
use crate::field::Field;

/// Energy `E = a·Σ λ_j x_j + b·F(u)` on the sphere of radius² `radius2`.
pub struct SphereTarget<'a> {
    pub rates: &'a [f64],
    pub kinetic_scale: f64,
    pub interaction_scale: f64,
    pub kernel: &'a InteractionKernel,
    pub radius2: f64,
}

impl SphereTarget<'_> {
    fn interacting(&self) -> bool {
        self.interaction_scale != 0.0 && !self.kernel.is_none()
    }

    pub fn energy(&self, coeffs: &[Complex64]) -> f64 {
        let kinetic: f64 = coeffs.iter().zip(self.rates).map(|(a, l)| l * a.norm_sqr()).sum();
        let mut e = self.kinetic_scale * kinetic;
        if self.interacting() {
            e += self.interaction_scale * self.kernel.energy(coeffs);
        }
        e
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSettings {
    pub burn_in_moves: usize,
    pub thinning: usize,
    pub initial_step: f64,
}

pub struct ChainOutput {
    pub samples: Vec<Field>,
    pub accepted: usize,
    pub proposed: usize,
    pub final_step: f64,
}

const ADAPT_WINDOW: usize = 200;
const MIN_STEP: f64 = 1e-4;

fn reflect_angle(mut phi: f64) -> f64 {
    // reflect into [0, π/2]
    phi = phi.rem_euclid(PI);
    if phi > FRAC_PI_2 {
        PI - phi
    } else {
        phi
    }
}

/// Draw a uniform point of the sphere.
pub fn uniform_sphere_point<R: Rng + ?Sized>(rng: &mut R, d: usize, radius2: f64) -> Vec<Complex64> {
    let e: Vec<f64> = (0..d).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = e.iter().sum();
    e.iter()
        .map(|x| Complex64::from_polar((radius2 * x / total).sqrt(), rng.random::<f64>() * TAU))
        .collect()
}

/// Run one chain; the step size adapts during burn-in only.
pub fn run_chain<R: Rng + ?Sized>(
    target: &SphereTarget<'_>,
    settings: ChainSettings,
    n_samples: usize,
    rng: &mut R,
) -> Result<ChainOutput> {
    let d = target.rates.len();
    let mut state = uniform_sphere_point(rng, d, target.radius2);
    let mut samples = Vec::with_capacity(n_samples);
    if d < 2 {
        for _ in 0..n_samples {
            samples.push(Field::new(state.clone()));
        }
        return Ok(ChainOutput { samples, accepted: 0, proposed: 0, final_step: settings.initial_step });
    }
    let mut energy = target.energy(&state);
    let mut step = settings.initial_step.clamp(MIN_STEP, FRAC_PI_2);
    let mut window_accepts = 0usize;
    let mut accepted = 0usize;
    let mut proposed = 0usize;
    let total_moves = settings.burn_in_moves + n_samples * settings.thinning;
    let interacting = target.interacting();
    for t in 0..total_moves {
        let j = rng.random_range(0..d);
        let mut k = rng.random_range(0..d - 1);
        if k >= j {
            k += 1;
        }
        let (xj, xk) = (state[j].norm_sqr(), state[k].norm_sqr());
        let s = xj + xk;
        let phi = if s > 0.0 { (xj / s).sqrt().clamp(0.0, 1.0).acos() } else { FRAC_PI_2 * 0.5 };
        let phi_new = reflect_angle(phi + step * (2.0 * rng.random::<f64>() - 1.0));
        let tj = state[j].arg() + 2.0 * step * (2.0 * rng.random::<f64>() - 1.0);
        let tk = state[k].arg() + 2.0 * step * (2.0 * rng.random::<f64>() - 1.0);
        let new_j = Complex64::from_polar((s * phi_new.cos().powi(2)).sqrt(), tj);
        let new_k = Complex64::from_polar((s * phi_new.sin().powi(2)).sqrt(), tk);
        let jac_old = (2.0 * phi).sin();
        let jac_new = (2.0 * phi_new).sin();
        let new_energy = if interacting {
            let (old_j, old_k) = (state[j], state[k]);
            state[j] = new_j;
            state[k] = new_k;
            let e = target.energy(&state);
            state[j] = old_j;
            state[k] = old_k;
            e
        } else {
            let dk = target.rates[j] * (new_j.norm_sqr() - xj) + target.rates[k] * (new_k.norm_sqr() - xk);
            energy + target.kinetic_scale * dk
        };
        let log_ratio = (jac_new / jac_old).ln() - (new_energy - energy);
        let accept = jac_new > 0.0 && (log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp());
        if accept {
            state[j] = new_j;
            state[k] = new_k;
            // rescale to hold the constraint against rounding drift
            let total: f64 = state.iter().map(|a| a.norm_sqr()).sum();
            let fix = (target.radius2 / total).sqrt();
            state.iter_mut().for_each(|a| *a *= fix);
            energy = if interacting || (t + 1) % 1024 == 0 { target.energy(&state) } else { new_energy };
        }
        if t < settings.burn_in_moves {
            window_accepts += accept as usize;
            if (t + 1) % ADAPT_WINDOW == 0 {
                let rate = window_accepts as f64 / ADAPT_WINDOW as f64;
                if rate > 0.6 {
                    step = (step * 1.25).min(FRAC_PI_2);
                } else if rate < 0.4 {
                    step = (step / 1.25).max(MIN_STEP);
                }
                window_accepts = 0;
            }
        } else {
            proposed += 1;
            accepted += accept as usize;
            if (t + 1 - settings.burn_in_moves) % settings.thinning == 0 {
                samples.push(Field::new(state.clone()));
            }
        }
    }
    Ok(ChainOutput { samples, accepted, proposed, final_step: step })
}

/// Tuning check on a pooled acceptance rate.
pub fn check_acceptance(rate: f64) -> Result<()> {
    if (0.1..=0.9).contains(&rate) {
        Ok(())
    } else {
        Err(Error::Tuning { acceptance: rate })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn reflection_stays_in_quarter_turn() {
        for phi in [-3.0, -0.1, 0.0, 0.5, 1.6, 3.5, 7.0] {
            let r = reflect_angle(phi);
            assert!((0.0..=FRAC_PI_2).contains(&r));
        }
        assert!((reflect_angle(-0.1) - 0.1).abs() < 1e-15);
        assert!((reflect_angle(FRAC_PI_2 + 0.1) - (FRAC_PI_2 - 0.1)).abs() < 1e-12);
    }

    #[test]
    fn constraint_holds_along_the_chain() {
        let rates = [1.0, 3.0, 7.0, 12.0];
        let kernel = InteractionKernel::None;
        let target = SphereTarget { rates: &rates, kinetic_scale: 1.0, interaction_scale: 0.0, kernel: &kernel, radius2: 2.5 };
        let settings = ChainSettings { burn_in_moves: 2000, thinning: 4, initial_step: 0.3 };
        let out = run_chain(&target, settings, 500, &mut stream_rng(1, 0)).unwrap();
        assert_eq!(out.samples.len(), 500);
        for f in &out.samples {
            assert!((f.mass() - 2.5).abs() < 1e-12);
        }
    }
}
