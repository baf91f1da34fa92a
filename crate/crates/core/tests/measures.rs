use gibbs_core::massdist::{conditioned_mode_mean, density_of_rates, EtaGrid};
use gibbs_core::measures::{
    decode_batch, encode_batch, estimate_dm, interaction_energy, mode_moments, read_batch, sample_measure,
    uniform_sphere_point, write_batch, write_batch_csv, InteractionPotential, MeasureSpec, SamplerOptions,
    SphereConvention,
};
use gibbs_core::rng::stream_rng;
use gibbs_core::spectral::{solve_spectrum, GridSpec, Scheme, SpectralBasis};
use gibbs_core::Field;
use proptest::prelude::*;

fn basis(modes: usize) -> SpectralBasis {
    solve_spectrum(8.0, GridSpec::new(3.0, 256, Scheme::FiniteDifferenceOrder4), modes).unwrap()
}

fn within(est: gibbs_core::stats::Estimate, exact: f64, sigmas: f64) -> bool {
    (est.value - exact).abs() <= sigmas * est.stderr + 1e-12
}

#[test]
fn free_gaussian_mode_masses_have_inverse_eigenvalue_means() {
    let b = basis(6);
    let batch = sample_measure(&MeasureSpec::free_gaussian(6), &b, 40_000, 11, &SamplerOptions::default(), None).unwrap();
    assert_eq!(batch.chains, 0);
    for (j, est) in mode_moments(&batch).into_iter().enumerate() {
        let exact = 1.0 / b.eigenvalues[j];
        assert!(within(est, exact, 4.0), "mode {j}: {est:?} vs {exact}");
    }
}

#[test]
fn sphere_samples_stay_on_the_sphere() {
    let b = basis(5);
    for (convention, radius2) in [(SphereConvention::Unit, 1.0), (SphereConvention::Radius, 2.5)] {
        let spec = MeasureSpec::sphere(5, 2.5, convention);
        let batch = sample_measure(&spec, &b, 800, 3, &SamplerOptions::default(), None).unwrap();
        assert_eq!(batch.chains, 8);
        assert!(batch.acceptance_rate.is_some());
        for f in &batch.fields {
            assert!((f.mass() - radius2).abs() < 1e-10, "mass {}", f.mass());
        }
    }
}

#[test]
fn conditioned_routes_agree_with_the_exact_mean() {
    let b = basis(6);
    let m = 0.8;
    let exact = conditioned_mode_mean(&b.eigenvalues, 0, m, 20_001).unwrap();
    let opts = SamplerOptions::default();

    let chain = sample_measure(&MeasureSpec::conditioned(6, m), &b, 20_000, 5, &opts, None).unwrap();
    let chain_mean = mode_moments(&chain)[0];
    assert!(within(chain_mean, exact, 3.0), "chain {chain_mean:?} vs {exact}");

    let high = density_of_rates(&b.eigenvalues[3..], EtaGrid::covering(2.0, 20_001).unwrap()).unwrap();
    let weighted = sample_measure(&MeasureSpec::conditioned(3, m), &b, 200_000, 5, &opts, Some(&high)).unwrap();
    let weighted_mean = mode_moments(&weighted)[0];
    assert!(within(weighted_mean, exact, 3.0), "weighted {weighted_mean:?} vs {exact}");
}

#[test]
fn conditioned_below_full_cutoff_needs_a_density() {
    let b = basis(6);
    let r = sample_measure(&MeasureSpec::conditioned(3, 1.0), &b, 10, 1, &SamplerOptions::default(), None);
    assert!(r.is_err());
}

#[test]
fn penalized_weights_favour_the_target_mass() {
    let b = basis(4);
    let batch = sample_measure(&MeasureSpec::penalized(4, 0.5, 0.01), &b, 5000, 2, &SamplerOptions::default(), None).unwrap();
    let best = batch.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let i = batch.log_weights.iter().position(|&w| w == best).unwrap();
    assert!((batch.fields[i].mass() - 0.5).abs() < 0.05);
}

#[test]
fn first_density_matrix_is_hermitian_with_mass_trace() {
    let b = basis(4);
    let batch = sample_measure(&MeasureSpec::sphere(4, 1.0, SphereConvention::Radius), &b, 2000, 9, &SamplerOptions::default(), None)
        .unwrap();
    let dm = estimate_dm(&batch, 1).unwrap();
    assert!(dm.hermitian_residual() < 1e-12);
    assert!((dm.trace().re - 1.0).abs() < 1e-10);
    assert!(dm.min_eigenvalue() > -1e-12);
    assert!(estimate_dm(&batch, 3).is_err());
}

#[test]
fn zero_potential_has_zero_interaction() {
    let b = basis(3);
    let f = Field::from_polar(&[0.5, 0.5, 0.2], &[0.0, 1.0, 2.0]);
    assert_eq!(interaction_energy(&f, &b, &InteractionPotential::zero()).unwrap(), 0.0);
    let w = InteractionPotential::gaussian_bump(0.5, 1.0).unwrap();
    assert!(interaction_energy(&f, &b, &w).unwrap() > 0.0);
}

#[test]
fn batch_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let b = basis(3);
    let batch = sample_measure(&MeasureSpec::penalized(3, 0.3, 0.05), &b, 50, 4, &SamplerOptions::default(), None).unwrap();
    let path = dir.path().join("s.bin");
    write_batch(&batch, &path).unwrap();
    assert_eq!(read_batch(&path).unwrap(), batch);
    let bytes = encode_batch(&batch).unwrap();
    assert!(decode_batch(&bytes[..bytes.len() - 3]).is_err());
    let csv_path = dir.path().join("s.csv");
    write_batch_csv(&batch, &csv_path).unwrap();
    let text = std::fs::read_to_string(csv_path).unwrap();
    assert!(text.starts_with("sample,re_1,im_1"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn same_seed_gives_same_batch() {
    let b = basis(4);
    let spec = MeasureSpec::sphere(4, 1.0, SphereConvention::Unit);
    let a = sample_measure(&spec, &b, 300, 21, &SamplerOptions::default(), None).unwrap();
    let c = sample_measure(&spec, &b, 300, 21, &SamplerOptions::default(), None).unwrap();
    assert_eq!(a, c);
}

proptest! {
    #[test]
    fn uniform_sphere_points_have_the_requested_norm(seed in any::<u64>(), d in 1usize..40, r2 in 0.01f64..100.0) {
        let mut rng = stream_rng(seed, 0);
        let p = uniform_sphere_point(&mut rng, d, r2);
        let norm: f64 = p.iter().map(|z| z.norm_sqr()).sum();
        prop_assert_eq!(p.len(), d);
        prop_assert!((norm - r2).abs() < 1e-10 * r2);
    }
}
