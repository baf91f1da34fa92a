//! E1 and E2: mass densities and the penalized partition integral.

use crate::error::Result;
use crate::experiments::config::{E1Config, E2Config};
use crate::experiments::report::{Clause, Comparison, Table};
use crate::massdist::{convolve, density_of_rates, penalized_partition, split_densities, EtaGrid};
use crate::spectral::tail_sum;

use super::{max_increase, Body, Context};

pub(crate) fn e1(cfg: &E1Config, ctx: &Context) -> Result<Body> {
    let basis = ctx.basis(&cfg.basis)?;
    let rates = &basis.eigenvalues;
    let grid = EtaGrid::new(cfg.eta_spacing, cfg.eta_points)?;
    let f0 = density_of_rates(rates, grid)?;
    let mut table = Table::new("splits", &["low_modes", "lambda_split", "l1_gap", "high_mass_above_delta", "sup_low_minus_f0"]);
    let mut gaps = Vec::new();
    let mut masses = Vec::new();
    let mut sups = Vec::new();
    for &k in &cfg.split_modes {
        let point = format!("split after {k} modes");
        if k == 0 || k >= rates.len() {
            return Err(crate::error::precondition(format!("split {k} outside 1..{}", rates.len())).at("E1", point));
        }
        let cutoff = 0.5 * (rates[k - 1] + rates[k]);
        let sd = split_densities(rates, cutoff, grid).map_err(|e| e.at("E1", &point))?;
        let conv = convolve(&sd.low, &sd.high).map_err(|e| e.at("E1", &point))?;
        let gap = conv.l1_distance(&f0).map_err(|e| e.at("E1", &point))?;
        let mass = sd.high.mass_above(cfg.delta);
        let sup = sd.low.sup_distance(&f0);
        table.push(vec![k as f64, cutoff, gap, mass, sup]);
        gaps.push(gap);
        masses.push(mass);
        sups.push(sup);
    }
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    let clauses = vec![
        Clause::new("convolution_l1_gap", "max over splits of ‖g_Λ * f_Λ − f_0‖_L1", max_gap, Comparison::AtMost, 1e-2)
            .criterion("A3"),
        Clause::new(
            "high_mass_nonincreasing",
            "largest increase of ∫_δ^∞ f_Λ between consecutive splits",
            max_increase(&masses),
            Comparison::AtMost,
            1e-12,
        )
        .criterion("A3"),
        Clause::new(
            "high_mass_vanishes",
            "∫_δ^∞ f_Λ at the largest split",
            *masses.last().expect("nonempty sweep"),
            Comparison::AtMost,
            1e-3,
        )
        .criterion("A3")
        .calibration(),
        Clause::new(
            "low_density_approaches_f0",
            "largest increase of sup|g_Λ − f_0| between consecutive splits",
            max_increase(&sups),
            Comparison::AtMost,
            1e-9,
        ),
    ];
    Ok(Body {
        clauses,
        tables: vec![table],
        notes: vec![format!(
            "f_0 built from {} resolved modes on {} points of spacing {}",
            rates.len(),
            cfg.eta_points,
            cfg.eta_spacing
        )],
    })
}

pub(crate) fn e2(cfg: &E2Config, ctx: &Context) -> Result<Body> {
    let basis = ctx.basis(&cfg.basis)?;
    let rates = &basis.eigenvalues;
    let grid = EtaGrid::new(cfg.eta_spacing, cfg.eta_points)?;
    let f0 = density_of_rates(rates, grid)?;
    let f0m = f0.value_at(cfg.m);
    let limit = std::f64::consts::PI.sqrt() * f0m;
    let top = *rates.last().expect("basis has modes");
    let tail = tail_sum(&basis, top, 1.0)?;
    let mut table = Table::new("penalty", &["eps", "z_r", "z_r_over_sqrt_eps", "limit", "relative_error"]);
    let mut errors = Vec::new();
    for &eps in &cfg.eps {
        let z = penalized_partition(&f0, cfg.m, eps).map_err(|e| e.at("E2", format!("eps = {eps}")))?;
        let scaled = z / eps.sqrt();
        let rel = (scaled / limit - 1.0).abs();
        table.push(vec![eps, z, scaled, limit, rel]);
        errors.push(rel);
    }
    let final_error = *errors.last().expect("nonempty sweep");
    let clauses = vec![
        Clause::new(
            "penalized_ratio",
            format!("|z^r/√ε ÷ √π f_0(m) − 1| at ε = {}", cfg.eps.last().unwrap()),
            final_error,
            Comparison::AtMost,
            0.05,
        )
        .criterion("A4"),
        Clause::new(
            "neglected_tail_mass",
            "extrapolated Σ_{λ_j > λ_max} 1/λ_j relative to m",
            tail.remainder / cfg.m,
            Comparison::Below,
            1e-3,
        )
        .criterion("A4"),
        Clause::new(
            "ratio_error_shrinks",
            "largest increase of the relative error as ε decreases",
            max_increase(&errors),
            Comparison::AtMost,
            0.0,
        )
        .calibration(),
        Clause::new("f0_positive_at_m", "f_0(m)", f0m, Comparison::AtLeast, f64::MIN_POSITIVE),
    ];
    Ok(Body {
        clauses,
        tables: vec![table],
        notes: vec![format!("f_0 integral {:.12}, clipped mass {:.3e}", f0.integral(), f0.clipped_mass)],
    })
}
