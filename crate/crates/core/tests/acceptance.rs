//! Acceptance run: every suite at the default configuration, twice, with the
//! artifact cache wiped in between. Prints one PASS/FAIL line per criterion.

use std::io::Write;

use gibbs_core::experiments::{run_suite_with_cache, Cache, ExperimentConfig, Report, SuiteId};

/// Criteria that fail at the default configuration for reasons recorded in
/// the project notes. They are reported but do not fail the test.
const KNOWN_FAILURES: &[&str] = &["A10"];

/// `(criterion, suite, runtime budget in seconds)`.
const CRITERIA: &[(&str, SuiteId, f64)] = &[
    ("A1", SuiteId::E4, 10.0),
    ("A2", SuiteId::E4, 10.0),
    ("A3", SuiteId::E1, 30.0),
    ("A4", SuiteId::E2, 30.0),
    ("A5", SuiteId::E3, 600.0),
    ("A6", SuiteId::E5, 900.0),
    ("A7", SuiteId::E6, 300.0),
    ("A8", SuiteId::E8, 60.0),
    ("A9", SuiteId::E7, 60.0),
    ("A10", SuiteId::E6, 600.0),
    ("A11", SuiteId::E9, 300.0),
];

/// Writes straight to stdout so the lines survive the test harness capture.
fn line(text: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
    let _ = out.flush();
}

fn run_all(cfg: &ExperimentConfig) -> Vec<Report> {
    let dir = tempfile::tempdir().unwrap();
    SuiteId::ALL
        .into_iter()
        .map(|id| run_suite_with_cache(cfg, id, Cache::new(dir.path())).unwrap())
        .collect()
}

fn failing_clauses(report: &Report, criterion: &str) -> String {
    report
        .clauses
        .iter()
        .filter(|c| c.criterion.as_deref() == Some(criterion) && !c.passed)
        .map(|c| format!("{}={:.4e} {} {:.4e}", c.id, c.value, c.comparison.symbol(), c.threshold))
        .collect::<Vec<_>>()
        .join(", ")
}

#[test]
fn acceptance_criteria() {
    let cfg = ExperimentConfig::default();
    let first = run_all(&cfg);
    let second = run_all(&cfg);
    let report = |id: SuiteId| first.iter().find(|r| r.suite == id.to_string()).unwrap();

    let mut unexpected = Vec::new();
    for &(criterion, suite, budget) in CRITERIA {
        let r = report(suite);
        let clauses_ok = r.criterion_passed(criterion).unwrap_or(false);
        let seconds = r.timestamp.wall_clock_seconds;
        let ok = clauses_ok && seconds < budget;
        let known = KNOWN_FAILURES.contains(&criterion);
        let detail = if clauses_ok { String::new() } else { format!(" [{}]", failing_clauses(r, criterion)) };
        line(format!(
            "{criterion} {}: {suite} {seconds:.1} s (budget {budget} s){detail}{}",
            if ok { "PASS" } else { "FAIL" },
            if !ok && known { " (known)" } else { "" }
        ));
        if !ok && !known {
            unexpected.push(criterion);
        }
    }

    let mismatched: Vec<String> = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| a.deterministic_json().unwrap() != b.deterministic_json().unwrap())
        .map(|(a, _)| a.suite.clone())
        .collect();
    if mismatched.is_empty() {
        line(format!("A12 PASS: {} suites byte-identical across two runs with a fresh cache", first.len()));
    } else {
        line(format!("A12 FAIL: reports differ for {}", mismatched.join(", ")));
        unexpected.push("A12");
    }

    assert!(unexpected.is_empty(), "failed criteria: {unexpected:?}");
}
