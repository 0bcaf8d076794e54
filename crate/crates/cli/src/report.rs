use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const SCHEMA_VERSION: &str = "klsrp-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Informational; never fails a run.
    Flagged,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Flagged => "FLAG",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub suite: String,
    pub name: String,
    /// SHA-256 of the canonical JSON of `(suite, name, inputs)`.
    pub inputs_digest: String,
    pub inputs: Value,
    pub values: BTreeMap<String, Value>,
    pub slacks: BTreeMap<String, f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
    pub detail: String,
}

impl CheckRecord {
    pub fn new(suite: &str, name: impl Into<String>, inputs: Value) -> Self {
        let name = name.into();
        let canonical = json!({ "suite": suite, "name": name, "inputs": inputs }).to_string();
        Self {
            suite: suite.into(),
            inputs_digest: hex::encode(Sha256::digest(canonical.as_bytes())),
            name,
            inputs,
            values: BTreeMap::new(),
            slacks: BTreeMap::new(),
            tolerance: None,
            status: Status::Flagged,
            detail: String::new(),
        }
    }

    pub fn value(mut self, key: &str, v: impl Serialize) -> Self {
        self.values.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
        self
    }

    pub fn slack(mut self, key: &str, v: f64) -> Self {
        self.slacks.insert(key.into(), v);
        self
    }

    pub fn tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    /// Pass iff `ok`.
    pub fn assert(mut self, ok: bool, detail: impl Into<String>) -> Self {
        self.status = Status::from_bool(ok);
        self.detail = detail.into();
        self
    }

    pub fn flag(mut self, detail: impl Into<String>) -> Self {
        self.status = Status::Flagged;
        self.detail = detail.into();
        self
    }

    /// Pass iff every recorded slack is at least `-tol`.
    pub fn assert_slacks(self, tol: f64, detail: impl Into<String>) -> Self {
        let ok = self.slacks.values().all(|&s| s >= -tol);
        self.tolerance(tol).assert(ok, detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
    pub unix_time: u64,
}

impl Environment {
    pub fn capture() -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            threads: rayon::current_num_threads(),
            unix_time: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub flagged: usize,
    pub failing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub suites: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
    pub environment: Environment,
    pub timing: Timing,
}

impl SuiteReport {
    pub fn new(command: &str, config: RunConfig, checks: Vec<CheckRecord>, timing: Timing) -> Self {
        let mut summary = Summary::default();
        for c in &checks {
            match c.status {
                Status::Pass => summary.passed += 1,
                Status::Flagged => summary.flagged += 1,
                Status::Fail => {
                    summary.failed += 1;
                    summary.failing.push(format!("{}.{}", c.suite, c.name));
                }
            }
        }
        Self {
            schema_version: SCHEMA_VERSION.into(),
            command: command.into(),
            seed: config.random.seed,
            config,
            checks,
            summary,
            environment: Environment::capture(),
            timing,
        }
    }
}

/// A rectangular table written as CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    /// Long format: one row per recorded value or slack.
    pub fn from_checks(checks: &[CheckRecord]) -> Self {
        let mut t = Self::new(["suite", "check", "status", "inputs_digest", "kind", "key", "value"].map(String::from).to_vec());
        for c in checks {
            let base = [c.suite.clone(), c.name.clone(), format!("{:?}", c.status).to_lowercase(), c.inputs_digest.clone()];
            for (k, v) in &c.values {
                let v = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                t.rows.push([&base[..], &["value".into(), k.clone(), v]].concat());
            }
            for (k, v) in &c.slacks {
                t.rows.push([&base[..], &["slack".into(), k.clone(), v.to_string()]].concat());
            }
        }
        t
    }

    pub fn write(&self, w: impl Write) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn write_json(report: &SuiteReport, path: Option<&Path>) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n"),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}")
        }
    }
}

pub fn write_csv(table: &Table, path: Option<&Path>) -> std::io::Result<()> {
    let res = match path {
        Some(p) => table.write(std::fs::File::create(p)?),
        None => table.write(std::io::stdout().lock()),
    };
    res.map_err(std::io::Error::other)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_depends_only_on_inputs() {
        let a = CheckRecord::new("kls", "x", json!({"seed": 7, "trials": 10}));
        let b = CheckRecord::new("kls", "x", json!({"trials": 10, "seed": 7})).value("v", 1.0);
        let c = CheckRecord::new("kls", "x", json!({"seed": 8, "trials": 10}));
        assert_eq!(a.inputs_digest, b.inputs_digest);
        assert_ne!(a.inputs_digest, c.inputs_digest);
        assert_eq!(a.inputs_digest.len(), 64);
    }

    #[test]
    fn slack_assertion_and_summary() {
        let ok = CheckRecord::new("s", "a", Value::Null).slack("x", -1e-12).assert_slacks(1e-10, "");
        let bad = CheckRecord::new("s", "b", Value::Null).slack("x", -1e-9).assert_slacks(1e-10, "");
        let flag = CheckRecord::new("s", "c", Value::Null).flag("info");
        let r = SuiteReport::new(
            "verify",
            RunConfig::default(),
            vec![ok, bad, flag],
            Timing {
                total_seconds: 0.0,
                suites: BTreeMap::new(),
            },
        );
        assert_eq!((r.summary.passed, r.summary.failed, r.summary.flagged), (1, 1, 1));
        assert_eq!(r.summary.failing, vec!["s.b".to_string()]);
    }

    #[test]
    fn long_table() {
        let c = CheckRecord::new("s", "a", Value::Null).value("v", 2.5).slack("x", 0.5).flag("");
        let t = Table::from_checks(&[c]);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0][6], "2.5");
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("suite,check,status"));
    }
}
