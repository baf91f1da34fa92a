use gibbs_core::fock::{
    build_interacting_hamiltonian, canonical_shift_bound, cannon_match, factorization_coeffs, free_canonical_occupations,
    free_canonical_partition, grand_canonical_mu, grand_canonical_occupations, pair_interaction_expectation,
    quantum_relative_entropy, reduced_dm, relaxed_sector_weights, thermal_relative_entropy, thermal_state,
    wmatrix_elements, OccupationBasis,
};
use gibbs_core::measures::InteractionPotential;
use gibbs_core::spectral::{solve_spectrum, GridSpec, Scheme};
use gibbs_core::stats::logsumexp;
use proptest::prelude::*;

/// `(log Z, ⟨n_j⟩)` by direct enumeration of the occupation basis.
fn enumerate(rates: &[f64], n: usize, t: f64) -> (f64, Vec<f64>) {
    let ob = OccupationBasis::new(rates.len(), n);
    let log_w: Vec<f64> = ob
        .states
        .iter()
        .map(|s| -s.iter().zip(rates).map(|(&k, l)| k as f64 * l).sum::<f64>() / t)
        .collect();
    let log_z = logsumexp(&log_w);
    let mut occ = vec![0.0; rates.len()];
    for (s, lw) in ob.states.iter().zip(&log_w) {
        let p = (lw - log_z).exp();
        for (o, &k) in occ.iter_mut().zip(s) {
            *o += p * k as f64;
        }
    }
    (log_z, occ)
}

fn sorted_rates(raw: Vec<f64>) -> Vec<f64> {
    let mut r = raw;
    r.sort_by(f64::total_cmp);
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn recursion_matches_enumeration(
        raw in prop::collection::vec(0.5f64..30.0, 1..5),
        n in 0usize..7,
        t in 0.3f64..20.0,
    ) {
        let rates = sorted_rates(raw);
        let log_z = free_canonical_partition(&rates, n, t).unwrap();
        let data = free_canonical_occupations(&rates, n, t).unwrap();
        let (exact_z, exact_occ) = enumerate(&rates, n, t);
        prop_assert!((log_z[n] - exact_z).abs() < 1e-10 * exact_z.abs().max(1.0));
        for (a, b) in data.occupations.iter().zip(&exact_occ) {
            prop_assert!((a - b).abs() < 1e-10 * (n as f64).max(1.0));
        }
        let total: f64 = data.occupations.iter().sum();
        prop_assert!((total - n as f64).abs() < 1e-10 * (n as f64).max(1.0));
    }

    #[test]
    fn factorization_coefficients_sum_to_one(
        raw in prop::collection::vec(0.5f64..30.0, 2..7),
        n in 1usize..10,
        t in 0.5f64..16.0,
        split in 0usize..5,
    ) {
        let rates = sorted_rates(raw);
        let k = split.min(rates.len() - 2);
        let cutoff = 0.5 * (rates[k] + rates[k + 1]);
        let f = factorization_coeffs(&rates, cutoff, n, t, 0.5 * n as f64 / t).unwrap();
        prop_assert_eq!(f.c.len(), n + 1);
        prop_assert!((f.c.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(f.c.iter().all(|&c| c >= 0.0));
        prop_assert!((f.d.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cannon_matching_is_a_bijection(raw in prop::collection::vec(0u32..4, 2..5), pad in 0u32..2) {
        let mut g = raw;
        let sum: u32 = g.iter().sum();
        if sum % 2 == 0 {
            g[0] += 1;
        }
        g[1] += 2 * pad;
        let n = (g.iter().sum::<u32>() as usize - 1) / 2;
        let m = cannon_match(&g, n).unwrap();
        prop_assert_eq!(m.domain.len(), m.codomain.len());
        let mut seen = vec![false; m.codomain.len()];
        for (i, &img) in m.image.iter().enumerate() {
            prop_assert!(!std::mem::replace(&mut seen[img], true));
            let j = m.coordinate[i];
            for k in 0..g.len() {
                prop_assert_eq!(m.codomain[img][k], m.domain[i][k] + u32::from(k == j));
            }
        }
    }
}

#[test]
fn cannon_rejects_even_totals() {
    assert!(cannon_match(&[1, 1], 1).is_err());
    assert!(cannon_match(&[2, 1], 2).is_err());
}

#[test]
fn shift_between_neighbouring_particle_numbers_is_at_most_one() {
    let rates: Vec<f64> = (1..=6).map(|j| (j * j) as f64).collect();
    let b = canonical_shift_bound(&rates, 30, 4.0).unwrap();
    assert_eq!(b.differences.len(), 30);
    assert!(b.max_difference <= 1.0 + 1e-12);
}

#[test]
fn grand_canonical_hits_the_target_number() {
    let rates = [1.0, 2.0, 4.0, 8.0];
    let nu = grand_canonical_mu(&rates, 5.0, 3.0).unwrap();
    let gc = grand_canonical_occupations(&rates, nu, 3.0).unwrap();
    assert!((gc.occupations.iter().sum::<f64>() - 5.0).abs() < 1e-9);
    let n0 = gc.occupations[0];
    assert!((gc.pair_occupations[0][0] - n0 * (1.0 + 2.0 * n0)).abs() < 1e-9 * n0.max(1.0));
    assert!(grand_canonical_occupations(&rates, -2.0, 3.0).is_err());
}

#[test]
fn relaxed_sector_weights_are_normalized() {
    let rates: Vec<f64> = (1..=5).map(|j| (j as f64 * std::f64::consts::PI).powi(2)).collect();
    let s = relaxed_sector_weights(&rates, 1.0, 8.0, 0.5, 60).unwrap();
    assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(s.weights.iter().all(|&w| w >= 0.0));
    assert!(relaxed_sector_weights(&rates, 1.0, 8.0, 0.5, 20).is_err());
    assert!(relaxed_sector_weights(&rates, 1.0, 8.0, -0.5, 60).is_err());
}

#[test]
fn interacting_state_satisfies_the_free_energy_identity() {
    let basis = solve_spectrum(4.0, GridSpec::new(3.0, 256, Scheme::FiniteDifferenceOrder4), 3).unwrap();
    let pot = InteractionPotential::gaussian_bump(0.5, 1.0).unwrap();
    let w = wmatrix_elements(&basis, 3, &pot).unwrap();
    let (n, t, g) = (4, 2.0, 1.5);
    let h0 = build_interacting_hamiltonian(&basis.eigenvalues, &w, n, 0.0).unwrap();
    let hg = build_interacting_hamiltonian(&basis.eigenvalues, &w, n, g).unwrap();
    assert!(hg.hermitian_residual < 1e-12);
    let s0 = thermal_state(&h0, t).unwrap();
    let sg = thermal_state(&hg, t).unwrap();

    let (exact_z, _) = enumerate(&basis.eigenvalues, n, t);
    assert!((s0.log_z - exact_z).abs() < 1e-10);

    let gamma = sg.density_matrix();
    let gamma1 = reduced_dm(&gamma, &hg.occupation_basis, 1).unwrap();
    let gamma2 = reduced_dm(&gamma, &hg.occupation_basis, 2).unwrap();
    assert!((gamma1.trace() - n as f64).abs() < 1e-10);
    assert!((gamma2.trace() - (n * (n - 1) / 2) as f64).abs() < 1e-10);

    let rel = thermal_relative_entropy(&sg, &s0);
    let dense = quantum_relative_entropy(&gamma, &s0.density_matrix()).unwrap();
    assert!(rel >= 0.0);
    assert!((rel - dense).abs() < 1e-8, "{rel} vs {dense}");
    let pair = pair_interaction_expectation(&w, &gamma2);
    let lhs = -(sg.log_z - s0.log_z);
    let rhs = rel + g / (n as f64 * t) * pair;
    assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(free_canonical_partition(&[1.0, 2.0], 3, 0.0).is_err());
    assert!(canonical_shift_bound(&[1.0], 0, 1.0).is_err());
    assert!(factorization_coeffs(&[1.0, 2.0], 0.5, 3, 1.0, 1.0).is_err());
}
