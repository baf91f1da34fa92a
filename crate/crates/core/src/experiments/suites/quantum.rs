//! E4, E7, E8: exact free-boson identities, the increment bijection, and
//! canonical versus grand-canonical domination.

use rand::Rng;

use crate::error::{precondition, Result};
use crate::experiments::config::{E4Config, E7Config, E8Config};
use crate::experiments::report::{Clause, Comparison, Table};
use crate::fock::cannon::bounded_compositions;
use crate::fock::{
    cannon_match, canonical_shift_bound, factorization_coeffs, free_canonical_occupations, grand_canonical_mu,
    grand_canonical_occupations, relaxed_sector_weights, OccupationBasis,
};
use crate::rng::stream_rng;
use crate::stats::logsumexp;

use super::{max_increase, Body, Context};

/// `log Z`, occupations, and pair occupations by summing over every state.
pub(crate) fn enumerate_free(rates: &[f64], n: usize, t: f64) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let d = rates.len();
    let ob = OccupationBasis::new(d, n);
    let logw: Vec<f64> = ob
        .states
        .iter()
        .map(|s| -s.iter().zip(rates).map(|(&c, l)| c as f64 * l).sum::<f64>() / t)
        .collect();
    let log_z = logsumexp(&logw);
    let p: Vec<f64> = logw.iter().map(|l| (l - log_z).exp()).collect();
    let mut occ = vec![0.0; d];
    let mut pair = vec![vec![0.0; d]; d];
    for (s, w) in ob.states.iter().zip(&p) {
        for j in 0..d {
            occ[j] += w * s[j] as f64;
            for k in 0..d {
                pair[j][k] += w * (s[j] as f64) * (s[k] as f64);
            }
        }
    }
    (log_z, occ, pair)
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}

pub(crate) fn e4(cfg: &E4Config, ctx: &Context) -> Result<Body> {
    let basis = ctx.basis(&cfg.basis)?;
    let all = &basis.eigenvalues;
    if cfg.max_enumeration_modes > all.len() || all.len() < 2 {
        return Err(precondition("E4 basis has too few modes"));
    }
    let mut enum_table = Table::new("enumeration", &["d", "N", "T", "log_z_error", "occupation_error", "pair_error"]);
    let (mut worst_z, mut worst_occ, mut worst_pair) = (0.0f64, 0.0f64, 0.0f64);
    for d in 1..=cfg.max_enumeration_modes {
        for n in 0..=cfg.max_enumeration_particles {
            for &t in &cfg.enumeration_temperatures {
                let rates = &all[..d];
                let rec = free_canonical_occupations(rates, n, t).map_err(|e| e.at("E4", format!("d={d} N={n} T={t}")))?;
                let (lz, occ, pair) = enumerate_free(rates, n, t);
                let ez = (rec.log_z[n] - lz).abs();
                let eo = occ.iter().zip(&rec.occupations).map(|(a, b)| rel_err(*b, *a)).fold(0.0, f64::max);
                let ep = (0..d)
                    .flat_map(|j| (0..d).map(move |k| (j, k)))
                    .map(|(j, k)| rel_err(rec.pair_occupations[j][k], pair[j][k]))
                    .fold(0.0, f64::max);
                enum_table.push(vec![d as f64, n as f64, t, ez, eo, ep]);
                worst_z = worst_z.max(ez);
                worst_occ = worst_occ.max(eo);
                worst_pair = worst_pair.max(ep);
            }
        }
    }

    let mut rng = stream_rng(ctx.seed, 4);
    let mut split_table = Table::new("splits", &["d", "N", "T", "low_modes", "sector_identity_gap", "c_sum_error"]);
    let (mut worst_gap, mut worst_sum) = (0.0f64, 0.0f64);
    let max_d = all.len().min(8);
    for _ in 0..cfg.random_splits {
        let d = rng.random_range(2..=max_d);
        let n = rng.random_range(1..=cfg.max_split_particles);
        let t = 0.5 * 2f64.powf(rng.random_range(0.0..5.0));
        let k = rng.random_range(1..d);
        let rates = &all[..d];
        let cutoff = 0.5 * (rates[k - 1] + rates[k]);
        let f = factorization_coeffs(rates, cutoff, n, t, 0.0)
            .map_err(|e| e.at("E4", format!("split d={d} N={n} T={t} k={k}")))?;
        let sum_err = (f.c.iter().sum::<f64>() - 1.0).abs();
        split_table.push(vec![d as f64, n as f64, t, k as f64, f.sector_identity_gap, sum_err]);
        worst_gap = worst_gap.max(f.sector_identity_gap);
        worst_sum = worst_sum.max(sum_err);
    }

    let mut relax_table = Table::new("relaxation", &["T", "eps", "n_max", "m1", "m2", "m3", "m4", "spread"]);
    let mut spreads = Vec::new();
    let mut moment4 = Vec::new();
    let mut norm_err = 0.0f64;
    let rates = &all[..all.len().min(8)];
    for &t in &cfg.relax_temperatures {
        let eps = t.powf(-cfg.relax_exponent);
        let n_max = (cfg.m * t + 10.0 * (eps * t * t / 2.0).sqrt()).ceil() as usize + 1;
        let w = relaxed_sector_weights(rates, cfg.m, t, eps, n_max).map_err(|e| e.at("E4", format!("relax T={t}")))?;
        let spread: f64 =
            w.weights.iter().enumerate().map(|(n, a)| a * (n as f64 / t - cfg.m).powi(2)).sum();
        norm_err = norm_err.max((w.weights.iter().sum::<f64>() - 1.0).abs());
        relax_table.push(vec![t, eps, n_max as f64, w.moment(1), w.moment(2), w.moment(3), w.moment(4), spread]);
        spreads.push(spread);
        moment4.push(w.moment(4));
    }
    let moment_bound = moment4.iter().copied().fold(0.0, f64::max);

    let clauses = vec![
        Clause::new("recursion_log_z", "max |log Z_rec − log Z_enum| over d ≤ 4, N ≤ 6", worst_z, Comparison::AtMost, 1e-12)
            .criterion("A1"),
        Clause::new("recursion_occupations", "max relative error of ⟨n_j⟩", worst_occ, Comparison::AtMost, 1e-12)
            .criterion("A1"),
        Clause::new("recursion_pairs", "max relative error of ⟨n_j n_k⟩", worst_pair, Comparison::AtMost, 1e-12)
            .criterion("A1"),
        Clause::new("sector_identity", "max |log Σ_n Z⁻_n Z⁺_{N−n} − log Z_N| over random splits", worst_gap, Comparison::AtMost, 1e-10)
            .criterion("A2"),
        Clause::new("sector_coefficients_sum", "max |Σ_n c_n − 1|", worst_sum, Comparison::AtMost, 1e-10).criterion("A2"),
        Clause::new("sector_weights_normalized", "max |Σ_N a_N − 1|", norm_err, Comparison::AtMost, 1e-12),
        Clause::new(
            "relaxed_spread_shrinks",
            "largest increase of Σ_N a_N (N/T − m)² along the T sweep with ε = T^(−a)",
            max_increase(&spreads),
            Comparison::AtMost,
            0.0,
        )
        .calibration(),
        Clause::new(
            "relaxed_moments_bounded",
            "largest fourth moment Σ_N a_N (N/T)^4 relative to its first-T value",
            moment_bound / moment4[0],
            Comparison::AtMost,
            2.0,
        )
        .calibration(),
    ];
    Ok(Body {
        clauses,
        tables: vec![enum_table, split_table, relax_table],
        notes: vec![format!("relaxation schedule ε = T^(−{}) (admissible below (s−2)/(4s))", cfg.relax_exponent)],
    })
}

/// Violations of the bijection properties for one matching.
fn cannon_violations(g: &[u32], n: usize) -> Result<usize> {
    let m = cannon_match(g, n)?;
    let mut bad = 0;
    if m.domain.len() != m.codomain.len() {
        bad += 1;
    }
    let mut seen = vec![false; m.codomain.len()];
    for (i, &img) in m.image.iter().enumerate() {
        if std::mem::replace(&mut seen[img], true) {
            bad += 1;
        }
        let j = m.coordinate[i];
        let (src, dst) = (&m.domain[i], &m.codomain[img]);
        let ok = src[j] < g[j]
            && (0..g.len()).all(|k| dst[k] == src[k] + u32::from(k == j))
            && src.iter().sum::<u32>() as usize == n;
        if !ok {
            bad += 1;
        }
    }
    if seen.iter().any(|s| !s) {
        bad += 1;
    }
    Ok(bad)
}

pub(crate) fn e7(cfg: &E7Config, ctx: &Context) -> Result<Body> {
    let mut cannon_table = Table::new("cannon", &["N", "vectors", "states", "violations"]);
    let mut total_bad = 0usize;
    let mut total_vectors = 0usize;
    for n in 0..=cfg.max_particles {
        let bound = vec![(2 * n + 1) as u32; cfg.max_support];
        let vectors = bounded_compositions(&bound, (2 * n + 1) as u32);
        let mut bad = 0;
        let mut states = 0;
        for g in &vectors {
            bad += cannon_violations(g, n).map_err(|e| e.at("E7", format!("g = {g:?}")))?;
            states += bounded_compositions(g, n as u32).len();
        }
        cannon_table.push(vec![n as f64, vectors.len() as f64, states as f64, bad as f64]);
        total_bad += bad;
        total_vectors += vectors.len();
    }
    let mut ones_bad = 0;
    for n in 0..=4usize {
        let g = vec![1u32; 2 * n + 1];
        ones_bad += cannon_violations(&g, n).map_err(|e| e.at("E7", format!("all-ones N = {n}")))?;
    }

    let basis = ctx.basis(&cfg.basis)?;
    let rates = &basis.eigenvalues[..cfg.shift_modes.min(basis.n_modes())];
    let mut shift_table = Table::new("shift", &["T", "N", "max_difference"]);
    let mut worst = 0.0f64;
    let mut monotone_bad = 0usize;
    let mut exponents = Vec::new();
    for &t in &cfg.shift_temperatures {
        let sb = canonical_shift_bound(rates, cfg.shift_max_particles, t).map_err(|e| e.at("E7", format!("shift T={t}")))?;
        for &(n, diff) in &sb.differences {
            shift_table.push(vec![t, n as f64, diff]);
        }
        worst = worst.max(sb.max_difference);
        exponents.push(sb.growth_exponent);
        let mut prev = free_canonical_occupations(rates, 0, t)?.occupations;
        for n in 1..=cfg.shift_max_particles + 1 {
            let next = free_canonical_occupations(rates, n, t)?.occupations;
            monotone_bad += prev.iter().zip(&next).filter(|(a, b)| **b < **a - 1e-12 * b.abs().max(1e-300)).count();
            prev = next;
        }
    }
    // Exact enumeration oracle for the shift on a small instance.
    let small = &basis.eigenvalues[..3.min(basis.n_modes())];
    let mut oracle_err = 0.0f64;
    for &t in &cfg.shift_temperatures {
        let sb = canonical_shift_bound(small, 6, t)?;
        for &(n, diff) in &sb.differences {
            let (_, a, _) = enumerate_free(small, n, t);
            let (_, b, _) = enumerate_free(small, n + 1, t);
            let exact = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            oracle_err = oracle_err.max((exact - diff).abs());
        }
    }

    let clauses = vec![
        Clause::violations(
            "cannon_bijection",
            format!("matchings that fail totality, injectivity, or the one-coordinate increment over {total_vectors} vectors"),
            total_bad,
        )
        .criterion("A9"),
        Clause::violations("cannon_all_ones", "violations for g = (1,…,1) of length 2N+1, N ≤ 4", ones_bad),
        Clause::new(
            "shift_bounded",
            format!("max_j |⟨n_j⟩_N − ⟨n_j⟩_(N+1)| over N ≤ {}", cfg.shift_max_particles),
            worst,
            Comparison::AtMost,
            1.0 + 1e-12,
        )
        .criterion("A9"),
        Clause::violations("occupations_monotone_in_n", "decreases of ⟨n_j⟩ as N grows", monotone_bad),
        Clause::new("shift_matches_enumeration", "max |shift − enumerated shift| for d = 3, N ≤ 6", oracle_err, Comparison::AtMost, 1e-12),
    ];
    Ok(Body {
        clauses,
        tables: vec![cannon_table, shift_table],
        notes: vec![format!(
            "shift growth exponents over the upper half of each sweep: {:?}",
            exponents.iter().map(|e| format!("{e:.3}")).collect::<Vec<_>>()
        )],
    })
}

pub const DOMINATION_CONSTANT: f64 = 40.0 / 1.8;

pub(crate) fn e8(cfg: &E8Config, ctx: &Context) -> Result<Body> {
    let basis = ctx.basis(&cfg.basis)?;
    let mut table = Table::new("domination", &["d", "N", "T", "nu", "max_ratio", "max_bound_ratio"]);
    let mut tightest = 0.0f64;
    let mut bound_worst = 0.0f64;
    let mut compared = 0usize;
    for &d in &cfg.dims {
        if d > basis.n_modes() {
            return Err(precondition(format!("E8 needs {d} modes, basis has {}", basis.n_modes())).at("E8", format!("d={d}")));
        }
        let rates = &basis.eigenvalues[..d];
        for &n in &cfg.particles {
            for &t in &cfg.temperatures {
                let point = format!("d={d} N={n} T={t}");
                let can = free_canonical_occupations(rates, n, t).map_err(|e| e.at("E8", &point))?;
                let nu = grand_canonical_mu(rates, n as f64, t).map_err(|e| e.at("E8", &point))?;
                let gc = grand_canonical_occupations(rates, nu, t).map_err(|e| e.at("E8", &point))?;
                let mut ratio = 0.0f64;
                let mut bound = 0.0f64;
                for j in 0..d {
                    if gc.occupations[j] > 1e-250 {
                        ratio = ratio.max(can.occupations[j] / gc.occupations[j]);
                        compared += 1;
                    }
                    bound = bound.max(gc.occupations[j] / (t / (rates[j] + nu)));
                }
                table.push(vec![d as f64, n as f64, t, nu, ratio, bound]);
                tightest = tightest.max(ratio);
                bound_worst = bound_worst.max(bound);
            }
        }
    }
    let clauses = vec![
        Clause::new(
            "canonical_dominated",
            "max over sweep and modes of ⟨n_j⟩_can / ⟨n_j⟩_gc (tightest empirical constant)",
            tightest,
            Comparison::AtMost,
            DOMINATION_CONSTANT,
        )
        .criterion("A8"),
        Clause::new(
            "grand_canonical_below_classical",
            "max over modes of ⟨n_j⟩_gc ÷ T/(λ_j + ν)",
            bound_worst,
            Comparison::AtMost,
            1.0,
        ),
    ];
    Ok(Body {
        clauses,
        tables: vec![table],
        notes: vec![format!(
            "{} sweep points, {compared} mode comparisons; tightest ratio {tightest:.4} against 40/1.8",
            cfg.dims.len() * cfg.particles.len() * cfg.temperatures.len()
        )],
    })
}
