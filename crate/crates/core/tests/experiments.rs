use gibbs_core::experiments::{
    run_suite_with_cache, BasisConfig, Cache, CacheOutcome, ExperimentConfig, Report, SuiteId,
};

#[test]
fn default_config_round_trips_through_toml() {
    let cfg = ExperimentConfig::default();
    let text = cfg.to_toml_string().unwrap();
    assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), cfg);
}

#[test]
fn partial_sections_fall_back_to_defaults() {
    let cfg = ExperimentConfig::from_toml_str("[general]\nseed = 99\n\n[E7]\nmax_particles = 3\n").unwrap();
    assert_eq!(cfg.general.seed, 99);
    assert_eq!(cfg.e7.max_particles, 3);
    assert_eq!(cfg.e8, ExperimentConfig::default().e8);
}

#[test]
fn invalid_configs_are_rejected() {
    for text in [
        "[E3]\nno_such_key = 1\n",
        "[E3]\ntemperatures = [4.0, 2.0]\n",
        "[E8]\ndims = []\n",
        "[E6]\nm1 = 3.0\nm2 = 1.0\n",
        "[E9]\nn_samples = 0\n",
        "[general\n",
    ] {
        assert!(ExperimentConfig::from_toml_str(text).is_err(), "accepted {text:?}");
    }
}

#[test]
fn cache_builds_hits_and_repairs_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::new(dir.path());
    let cfg = BasisConfig::smooth(4.0, 4);
    let (first, outcome) = cache.basis(&cfg).unwrap();
    assert_eq!(outcome, CacheOutcome::Built);
    let (second, outcome) = cache.basis(&cfg).unwrap();
    assert_eq!(outcome, CacheOutcome::Hit);
    assert_eq!(first, second);

    let path = cache.path_for(&Cache::key("basis-v1", &cfg).unwrap());
    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    std::fs::write(&path, bytes).unwrap();
    let (third, outcome) = cache.basis(&cfg).unwrap();
    assert_eq!(outcome, CacheOutcome::Rebuilt);
    assert_eq!(first, third);
}

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.e7.max_particles = 3;
    cfg.e7.shift_max_particles = 10;
    cfg.e8.dims = vec![2, 4];
    cfg.e8.particles = vec![1, 4];
    cfg.e8.temperatures = vec![1.0, 8.0];
    cfg
}

#[test]
fn small_quantum_suites_pass_and_emit_files() {
    let cache_dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let cfg = small_config();
    for id in [SuiteId::E7, SuiteId::E8] {
        let report = run_suite_with_cache(&cfg, id, Cache::new(cache_dir.path())).unwrap();
        assert!(report.passed(), "{}", report.summary());
        assert_eq!(report.suite, id.to_string());
        assert!(report.config.get("general").is_some());

        let written = report.emit(out.path()).unwrap();
        assert!(written.iter().all(|p| p.exists()));
        assert_eq!(written.len(), 2 + report.tables.len());
        let json = std::fs::read_to_string(&written[0]).unwrap();
        assert_eq!(Report::from_json(&json).unwrap(), report);
        assert!(!report.deterministic_json().unwrap().contains("wall_clock_seconds"));
    }
}

#[test]
fn reports_do_not_depend_on_cache_state() {
    let cfg = small_config();
    let dir = tempfile::tempdir().unwrap();
    let a = run_suite_with_cache(&cfg, SuiteId::E7, Cache::new(dir.path())).unwrap();
    let b = run_suite_with_cache(&cfg, SuiteId::E7, Cache::new(dir.path())).unwrap();
    assert_eq!(a.deterministic_json().unwrap(), b.deterministic_json().unwrap());
}
