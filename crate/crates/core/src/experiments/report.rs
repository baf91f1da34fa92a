//! Suite reports and their JSON, CSV, and plain-text renderings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    /// `value ≤ threshold`
    AtMost,
    /// `value < threshold`
    Below,
    /// `value ≥ threshold`
    AtLeast,
}

impl Comparison {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::AtMost => value <= threshold,
            Comparison::Below => value < threshold,
            Comparison::AtLeast => value >= threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::AtMost => "<=",
            Comparison::Below => "<",
            Comparison::AtLeast => ">=",
        }
    }
}

/// One checked claim: `value <comparison> threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub id: String,
    /// Acceptance criterion this clause belongs to, if any.
    pub criterion: Option<String>,
    pub description: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub comparison: Comparison,
    pub threshold: f64,
    pub passed: bool,
    /// The threshold is a calibration choice of this toolkit rather than a
    /// quantity fixed by the underlying theory.
    pub calibration: bool,
}

impl Clause {
    pub fn new(id: impl Into<String>, description: impl Into<String>, value: f64, comparison: Comparison, threshold: f64) -> Self {
        let passed = value.is_finite() && comparison.holds(value, threshold);
        Self {
            id: id.into(),
            criterion: None,
            description: description.into(),
            value,
            stderr: None,
            comparison,
            threshold,
            passed,
            calibration: false,
        }
    }

    pub fn criterion(mut self, c: &str) -> Self {
        self.criterion = Some(c.to_string());
        self
    }

    pub fn stderr(mut self, s: f64) -> Self {
        self.stderr = Some(s);
        self
    }

    pub fn calibration(mut self) -> Self {
        self.calibration = true;
        self
    }

    /// A boolean property encoded as a count of violations that must be zero.
    pub fn violations(id: impl Into<String>, description: impl Into<String>, count: usize) -> Self {
        Self::new(id, description, count as f64, Comparison::AtMost, 0.0)
    }
}

/// A per-sweep table for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::Internal(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Run metadata that legitimately differs between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamp {
    pub started_unix_seconds: f64,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub title: String,
    pub code_version: String,
    pub threads: usize,
    pub seed: u64,
    /// Full configuration in effect for the run.
    pub config: serde_json::Value,
    /// Conventions and choices that affect the numbers.
    pub notes: Vec<String>,
    pub clauses: Vec<Clause>,
    pub tables: Vec<Table>,
    pub timestamp: Timestamp,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    /// Whether every clause tied to `criterion` passed; `None` if there are none.
    pub fn criterion_passed(&self, criterion: &str) -> Option<bool> {
        let mut it = self.clauses.iter().filter(|c| c.criterion.as_deref() == Some(criterion)).peekable();
        it.peek()?;
        Some(it.all(|c| c.passed))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// JSON rendering without the `timestamp` field, for run-to-run comparison.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(obj) = value.as_object_mut() {
            obj.remove("timestamp");
        }
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}: {}", self.suite, self.title, if self.passed() { "PASS" } else { "FAIL" });
        let _ = writeln!(
            s,
            "version {} | threads {} | seed {} | {:.1} s",
            self.code_version, self.threads, self.seed, self.timestamp.wall_clock_seconds
        );
        for c in &self.clauses {
            let err = c.stderr.map(|e| format!(" ± {e:.3e}")).unwrap_or_default();
            let tag = c.criterion.as_deref().map(|t| format!("[{t}] ")).unwrap_or_default();
            let cal = if c.calibration { " (calibration)" } else { "" };
            let _ = writeln!(
                s,
                "  {} {tag}{}: {:.6e}{err} {} {:.6e}{cal}",
                if c.passed { "PASS" } else { "FAIL" },
                c.id,
                c.value,
                c.comparison.symbol(),
                c.threshold
            );
        }
        for n in &self.notes {
            let _ = writeln!(s, "  note: {n}");
        }
        s
    }

    /// Write `<suite>.json`, `<suite>.txt`, and one `<suite>_<table>.csv` per table.
    pub fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join(format!("{}.json", self.suite));
        std::fs::write(&json, self.to_json()?)?;
        written.push(json);
        let txt = dir.join(format!("{}.txt", self.suite));
        std::fs::write(&txt, self.summary())?;
        written.push(txt);
        for t in &self.tables {
            let path = dir.join(format!("{}_{}.csv", self.suite, t.name));
            std::fs::write(&path, t.to_csv()?)?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut t = Table::new("sweep", &["T", "gap"]);
        t.push(vec![8.0, 0.25]);
        Report {
            suite: "E0".into(),
            title: "test".into(),
            code_version: "0".into(),
            threads: 1,
            seed: 3,
            config: serde_json::json!({"a": 1}),
            notes: vec![],
            clauses: vec![Clause::new("x", "x small", 0.1, Comparison::AtMost, 0.2).criterion("A0")],
            tables: vec![t],
            timestamp: Timestamp { started_unix_seconds: 1.0, wall_clock_seconds: 2.0 },
        }
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        assert_eq!(Report::from_json(&r.to_json().unwrap()).unwrap(), r);
        assert_eq!(r.criterion_passed("A0"), Some(true));
        assert_eq!(r.criterion_passed("A1"), None);
    }

    #[test]
    fn deterministic_json_ignores_timestamp() {
        let a = sample();
        let mut b = sample();
        b.timestamp.wall_clock_seconds = 99.0;
        assert_ne!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.deterministic_json().unwrap(), b.deterministic_json().unwrap());
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new("empty", &["a", "b"]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n");
    }

    #[test]
    fn nan_values_fail() {
        assert!(!Clause::new("n", "nan", f64::NAN, Comparison::AtMost, 1.0).passed);
    }
}
