use gibbs_core::massdist::{
    conditioned_mode_mean, convolve, density_closed_form, density_from_cf_auto, density_of_rates, penalized_partition,
    split_densities, EtaGrid,
};
use proptest::prelude::*;

fn box_rates(n: usize) -> Vec<f64> {
    (1..=n).map(|j| (j as f64 * std::f64::consts::PI).powi(2)).collect()
}

#[test]
fn two_rate_density_matches_hypoexponential_formula() {
    let (a, b) = (1.0, 3.0);
    let grid = EtaGrid::covering(10.0, 2001).unwrap();
    let f = density_closed_form(&[a, b], grid).unwrap();
    for i in (0..grid.len).step_by(97) {
        let x = grid.eta(i);
        let exact = a * b / (b - a) * ((-a * x).exp() - (-b * x).exp());
        assert!((f.values[i] - exact).abs() < 1e-12, "eta {x}: {} vs {exact}", f.values[i]);
    }
}

#[test]
fn inversion_agrees_with_closed_form() {
    let rates = box_rates(6);
    let grid = EtaGrid::covering(0.6, 4001).unwrap();
    let closed = density_closed_form(&rates, grid).unwrap();
    let cf = density_from_cf_auto(&rates, grid).unwrap();
    assert!(closed.sup_distance(&cf) < 1e-6 * closed.sup(), "sup gap {}", closed.sup_distance(&cf));
}

#[test]
fn density_integrates_to_one_with_the_expected_mean() {
    let rates = box_rates(40);
    let grid = EtaGrid::covering(2.5, 20001).unwrap();
    let f = density_of_rates(&rates, grid).unwrap();
    assert!((f.integral() - 1.0).abs() < 1e-4, "integral {}", f.integral());
    let mean: f64 = rates.iter().map(|l| 1.0 / l).sum();
    assert!((f.mean() - mean).abs() / mean < 1e-3, "mean {} vs {mean}", f.mean());
    assert!((f.exact_mean() - mean).abs() < 1e-15);
}

#[test]
fn convolution_of_split_reproduces_the_full_density() {
    let rates = box_rates(40);
    let grid = EtaGrid::covering(1.0, 8001).unwrap();
    let split = split_densities(&rates, rates[2], grid).unwrap();
    let joined = convolve(&split.low, &split.high).unwrap();
    let gap = joined.l1_distance(&split.full).unwrap();
    assert!(gap < 1e-2, "L1 gap {gap}");
}

#[test]
fn split_requires_both_sides() {
    let rates = box_rates(5);
    let grid = EtaGrid::covering(1.0, 101).unwrap();
    assert!(split_densities(&rates, 0.1, grid).is_err());
    assert!(split_densities(&rates, 1e9, grid).is_err());
}

#[test]
fn penalized_partition_approaches_the_density_at_small_width() {
    let rates = box_rates(40);
    let grid = EtaGrid::covering(3.0, 60001).unwrap();
    let f0 = density_of_rates(&rates, grid).unwrap();
    let eps = 1e-3;
    let z = penalized_partition(&f0, 0.2, eps).unwrap();
    let target = std::f64::consts::PI.sqrt() * f0.value_at(0.2);
    assert!((z / eps.sqrt() - target).abs() / target < 0.05);
    assert!(penalized_partition(&f0, 0.2, 1e-12).is_err());
    assert!(penalized_partition(&f0, 10.0, eps).is_err());
}

#[test]
fn two_mode_conditioned_mean_matches_truncated_exponential() {
    let (a, b, m) = (2.0, 5.0, 1.5);
    let c: f64 = a - b;
    let exact = 1.0 / c - m / ((c * m).exp() - 1.0);
    let got = conditioned_mode_mean(&[a, b], 0, m, 4001).unwrap();
    assert!((got - exact).abs() < 1e-8, "{got} vs {exact}");
}

#[test]
fn conditioned_means_sum_to_the_mass() {
    let rates = box_rates(8);
    let m = 0.3;
    let total: f64 = (0..8).map(|j| conditioned_mode_mean(&rates, j, m, 20001).unwrap()).sum();
    assert!((total - m).abs() < 1e-6, "sum {total}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn densities_are_normalized_and_nonnegative(rates in prop::collection::vec(0.5f64..20.0, 1..8)) {
        let eta_max = 40.0 * rates.iter().map(|l| 1.0 / l).sum::<f64>();
        let grid = EtaGrid::covering(eta_max, 8001).unwrap();
        let f = density_of_rates(&rates, grid).unwrap();
        prop_assert!(f.values.iter().all(|&v| v >= 0.0));
        prop_assert!((f.integral() - 1.0).abs() < 1e-3, "integral {}", f.integral());
    }
}
