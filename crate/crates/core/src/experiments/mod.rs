//! Verification suites E1–E9: configuration, artifact cache, and reports.

pub mod cache;
pub mod config;
pub mod report;
mod suites;

use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub use cache::{Cache, CacheOutcome, CACHE_ENV};
pub use config::{BasisConfig, ExperimentConfig, GeneralConfig, PotentialConfig, SuiteId};
pub use report::{Clause, Comparison, Report, Table, Timestamp};
pub use suites::DOMINATION_CONSTANT;

use crate::error::Result;
use suites::{Body, Context};

/// Run one suite with the artifact cache from the environment.
pub fn run_suite(cfg: &ExperimentConfig, id: SuiteId) -> Result<Report> {
    run_suite_with_cache(cfg, id, Cache::from_env())
}

pub fn run_suite_with_cache(cfg: &ExperimentConfig, id: SuiteId, cache: Cache) -> Result<Report> {
    cfg.validate()?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let ctx = Context { cache, seed: cfg.general.seed, strict: cfg.general.strict };
    let (body, section) = match id {
        SuiteId::E1 => (suites::e1(&cfg.e1, &ctx)?, serde_json::to_value(&cfg.e1)?),
        SuiteId::E2 => (suites::e2(&cfg.e2, &ctx)?, serde_json::to_value(&cfg.e2)?),
        SuiteId::E3 => (suites::e3(&cfg.e3, &ctx)?, serde_json::to_value(&cfg.e3)?),
        SuiteId::E4 => (suites::e4(&cfg.e4, &ctx)?, serde_json::to_value(&cfg.e4)?),
        SuiteId::E5 => (suites::e5(&cfg.e5, &ctx)?, serde_json::to_value(&cfg.e5)?),
        SuiteId::E6 => (suites::e6(&cfg.e6, &ctx)?, serde_json::to_value(&cfg.e6)?),
        SuiteId::E7 => (suites::e7(&cfg.e7, &ctx)?, serde_json::to_value(&cfg.e7)?),
        SuiteId::E8 => (suites::e8(&cfg.e8, &ctx)?, serde_json::to_value(&cfg.e8)?),
        SuiteId::E9 => (suites::e9(&cfg.e9, &ctx)?, serde_json::to_value(&cfg.e9)?),
    };
    let Body { clauses, tables, notes } = body;
    Ok(Report {
        suite: id.to_string(),
        title: id.title().to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        threads: rayon::current_num_threads(),
        seed: cfg.general.seed,
        config: serde_json::json!({ "general": serde_json::to_value(&cfg.general)?, id.to_string(): section }),
        notes,
        clauses,
        tables,
        timestamp: Timestamp { started_unix_seconds: started, wall_clock_seconds: clock.elapsed().as_secs_f64() },
    })
}

/// Run every suite in order.
pub fn run_all(cfg: &ExperimentConfig) -> Result<Vec<Report>> {
    let cache = Cache::from_env();
    SuiteId::ALL.into_iter().map(|id| run_suite_with_cache(cfg, id, cache.clone())).collect()
}
