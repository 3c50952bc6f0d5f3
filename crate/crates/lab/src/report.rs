use crate::config::RunConfig;
use serde::Serialize;
use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `measured ≤ tolerance`
    AtMost,
    /// `measured ≥ −tolerance`
    AtLeastNegTol,
    /// `measured ≥ tolerance`
    AtLeast,
    /// `measured` is `1` (true) or `0` (false); tolerance unused.
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub anchor: String,
    pub measured: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Assertion {
    fn new(name: &str, anchor: &str, measured: f64, tolerance: f64, comparison: Comparison) -> Self {
        let passed = match comparison {
            Comparison::AtMost => measured <= tolerance,
            Comparison::AtLeastNegTol => measured >= -tolerance,
            Comparison::AtLeast => measured >= tolerance,
            Comparison::Holds => measured == 1.0,
        };
        Self {
            name: name.to_string(),
            anchor: anchor.to_string(),
            measured,
            tolerance,
            comparison,
            passed,
            note: None,
        }
    }

    pub fn at_most(name: &str, anchor: &str, measured: f64, tolerance: f64) -> Self {
        Self::new(name, anchor, measured, tolerance, Comparison::AtMost)
    }

    pub fn nonnegative(name: &str, anchor: &str, measured: f64, tolerance: f64) -> Self {
        Self::new(name, anchor, measured, tolerance, Comparison::AtLeastNegTol)
    }

    pub fn at_least(name: &str, anchor: &str, measured: f64, bound: f64) -> Self {
        Self::new(name, anchor, measured, bound, Comparison::AtLeast)
    }

    pub fn holds(name: &str, anchor: &str, ok: bool) -> Self {
        Self::new(name, anchor, if ok { 1.0 } else { 0.0 }, 0.0, Comparison::Holds)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// A table destined for one CSV file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Curve {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Curve {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        Ok(path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
    /// The path broke down and breakdown was expected.
    ExpectedBreakdown,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub status: Status,
    pub assertions: Vec<Assertion>,
    /// Measured quantities that are recorded but not asserted.
    pub records: serde_json::Map<String, serde_json::Value>,
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub curves: Vec<Curve>,
    pub seconds: f64,
}

impl ExperimentReport {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            status: Status::Passed,
            assertions: vec![],
            records: serde_json::Map::new(),
            artifacts: vec![],
            error: None,
            curves: vec![],
            seconds: 0.0,
        }
    }

    pub fn assert(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    pub fn record(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.records.insert(key.to_string(), v);
    }

    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    /// Sets `status` from the assertions unless an error or an expected
    /// breakdown was already recorded.
    pub fn settle(&mut self) {
        if self.status == Status::Error {
            return;
        }
        if !self.all_passed() {
            self.status = Status::Failed;
        }
    }

    pub fn succeeded(&self) -> bool {
        matches!(self.status, Status::Passed | Status::ExpectedBreakdown)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub lab: &'static str,
    pub krs_core: &'static str,
}

pub const VERSIONS: Versions = Versions {
    lab: env!("CARGO_PKG_VERSION"),
    krs_core: krs_core::VERSION,
};

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub versions: Versions,
    pub generated_unix: u64,
    pub passed: bool,
    pub experiments: Vec<ExperimentReport>,
}

impl Manifest {
    pub fn new(config: RunConfig, experiments: Vec<ExperimentReport>) -> Self {
        let generated_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let passed = experiments.iter().all(|e| e.succeeded());
        Self {
            config,
            versions: VERSIONS,
            generated_unix,
            passed,
            experiments,
        }
    }

    /// Writes `manifest.json` and every curve under `out_dir/<experiment>/`.
    pub fn write(&mut self, out_dir: &Path) -> io::Result<PathBuf> {
        std::fs::create_dir_all(out_dir)?;
        for e in &mut self.experiments {
            let dir = out_dir.join(&e.experiment);
            e.artifacts.clear();
            for c in &e.curves {
                let p = c.write(&dir)?;
                let rel = p.strip_prefix(out_dir).unwrap_or(&p);
                e.artifacts.push(rel.display().to_string());
            }
        }
        let path = out_dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}
