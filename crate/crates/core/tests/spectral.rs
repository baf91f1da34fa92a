use std::f64::consts::PI;

use gibbs_core::spectral::{
    counting_law_slope, decode_basis, encode_basis, kinetic_form, read_basis, solve_spectrum, tail_sum,
    weyl_exponent, write_basis, write_eigenvalues_csv, GridSpec, Scheme,
};
use gibbs_core::Field;
use proptest::prelude::*;

fn grid(half_width: f64, n: usize) -> GridSpec {
    GridSpec::new(half_width, n, Scheme::FiniteDifferenceOrder4)
}

#[test]
fn dirichlet_box_matches_closed_form() {
    let basis = solve_spectrum(f64::INFINITY, grid(1.0, 2048), 20).unwrap();
    for (j, l) in basis.eigenvalues.iter().enumerate() {
        let exact = ((j + 1) as f64 * PI).powi(2);
        assert!((l - exact).abs() / exact < 1e-6, "mode {}: {l} vs {exact}", j + 1);
    }
}

#[test]
fn near_harmonic_trap_matches_odd_integers() {
    let basis = solve_spectrum(2.0 + 1e-9, grid(8.0, 2048), 10).unwrap();
    for (j, l) in basis.eigenvalues.iter().enumerate() {
        let exact = (2 * j + 1) as f64;
        assert!((l - exact).abs() < 1e-4, "mode {}: {l} vs {exact}", j + 1);
    }
}

#[test]
fn eigenfunctions_are_orthonormal_under_quadrature() {
    let basis = solve_spectrum(6.0, grid(3.0, 1024), 12).unwrap();
    let w = basis.quad_weights();
    for a in 0..12 {
        for b in 0..12 {
            let ip: f64 = (0..w.len()).map(|i| basis.eigenfunctions[a][i] * basis.eigenfunctions[b][i] * w[i]).sum();
            let expected = if a == b { 1.0 } else { 0.0 };
            assert!((ip - expected).abs() < 1e-9, "<u_{a}, u_{b}> = {ip}");
        }
    }
}

#[test]
fn counting_law_follows_the_weyl_exponent() {
    let basis = solve_spectrum(8.0, grid(3.0, 2048), 64).unwrap();
    let slope = counting_law_slope(&basis.eigenvalues).unwrap();
    assert!((slope - weyl_exponent(8.0)).abs() < 0.05, "slope {slope} vs {}", weyl_exponent(8.0));
}

#[test]
fn tail_sum_with_remainder_approaches_the_resolved_sum_on_a_larger_basis() {
    let small = solve_spectrum(8.0, grid(3.0, 2048), 32).unwrap();
    let large = solve_spectrum(8.0, grid(3.0, 2048), 128).unwrap();
    let cutoff = small.eigenvalues[15];
    let a = tail_sum(&small, cutoff, 2.0).unwrap().total();
    let b = tail_sum(&large, cutoff, 2.0).unwrap().total();
    assert!((a - b).abs() / b < 0.02, "{a} vs {b}");
    assert!(tail_sum(&small, small.eigenvalues[31] + 1.0, 2.0).is_err());
}

#[test]
fn basis_file_round_trip_and_csv_export() {
    let dir = tempfile::tempdir().unwrap();
    let basis = solve_spectrum(4.0, grid(3.0, 256), 6).unwrap();
    let path = dir.path().join("b.bin");
    write_basis(&basis, &path).unwrap();
    assert_eq!(read_basis(&path).unwrap(), basis);
    let csv_path = dir.path().join("ev.csv");
    write_eigenvalues_csv(&basis, &csv_path).unwrap();
    let text = std::fs::read_to_string(csv_path).unwrap();
    assert!(text.starts_with("j,lambda_j\n1,"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn corrupted_basis_is_rejected() {
    let basis = solve_spectrum(4.0, grid(3.0, 128), 3).unwrap();
    let mut bytes = encode_basis(&basis);
    assert!(decode_basis(&bytes[..bytes.len() - 1]).is_err());
    bytes[0] ^= 1;
    assert!(decode_basis(&bytes).is_err());
}

#[test]
fn invalid_requests_fail() {
    assert!(solve_spectrum(1.5, grid(3.0, 256), 4).is_err());
    assert!(solve_spectrum(4.0, grid(3.0, 8), 20).is_err());
    assert!(solve_spectrum(4.0, grid(-1.0, 256), 2).is_err());
}

#[test]
fn kinetic_form_weights_mode_masses_by_eigenvalues() {
    let basis = solve_spectrum(4.0, grid(3.0, 256), 3).unwrap();
    let f = Field::from_polar(&[1.0, 0.5, 0.0], &[0.3, 1.0, 0.0]);
    let k = kinetic_form(&basis, &f).unwrap();
    assert!((k - basis.eigenvalues[0] - 0.25 * basis.eigenvalues[1]).abs() < 1e-12);
    assert!(kinetic_form(&basis, &Field::zeros(4)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn eigenvalues_are_positive_and_increasing(s in 2.5f64..12.0, modes in 2usize..10) {
        let basis = solve_spectrum(s, grid(3.0, 512), modes).unwrap();
        prop_assert!(basis.eigenvalues[0] > 0.0);
        prop_assert!(basis.eigenvalues.windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(basis.eigenfunctions.len(), modes);
    }

    #[test]
    fn truncation_keeps_leading_modes(k in 1usize..8) {
        let basis = solve_spectrum(8.0, grid(3.0, 256), 8).unwrap();
        let t = basis.truncated(k).unwrap();
        prop_assert_eq!(&t.eigenvalues[..], &basis.eigenvalues[..k]);
        prop_assert_eq!(&t.eigenfunctions[..], &basis.eigenfunctions[..k]);
    }
}
