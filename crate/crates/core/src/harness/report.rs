//! Check records and their JSON, markdown and CSV renderings.
//!
//! JSON output is deterministic: object keys are sorted and every float is
//! printed with 17 significant digits. Wall-clock runtime only appears in
//! the markdown rendering.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};
use crate::harness::config::OutputFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Informational,
    ResourceFailure,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Informational => "informational",
            Self::ResourceFailure => "resource-failure",
        }
    }
}

/// A parameter or measured value.
#[derive(Debug, Clone, PartialEq)]
pub enum Param {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<usize> for Param {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<u64> for Param {
    fn from(v: u64) -> Self {
        Self::Int(v as i64)
    }
}

impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<&str> for Param {
    fn from(v: &str) -> Self {
        Self::Text(v.to_string())
    }
}

impl From<String> for Param {
    fn from(v: String) -> Self {
        Self::Text(v)
    }
}

fn float_value(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(serde_json::from_str::<Number>(&float_text(x)).expect("formatted float is valid JSON"))
}

fn float_text(x: f64) -> String {
    // adding 0.0 maps -0.0, the value of an empty sum, to 0.0
    format!("{:.16e}", x + 0.0)
}

impl Param {
    fn to_json(&self) -> Value {
        match self {
            Self::Int(v) => Value::from(*v),
            Self::Float(v) => float_value(*v),
            Self::Text(s) => Value::from(s.clone()),
        }
    }

    fn to_text(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Float(v) => float_text(*v),
            Self::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub id: String,
    /// What the check establishes, in words.
    pub anchor: String,
    pub params: BTreeMap<String, Param>,
    pub value: Param,
    /// `None` for checks with an exact expected value recorded in `params`.
    pub tolerance: Option<f64>,
    pub status: Status,
    pub detail: Option<String>,
    /// Refinement study `(param, value)` pairs, written to `series/<id>.csv`.
    pub series: Vec<(f64, f64)>,
}

impl CheckRecord {
    pub fn new(id: &str, anchor: &str) -> Self {
        Self {
            id: id.to_string(),
            anchor: anchor.to_string(),
            params: BTreeMap::new(),
            value: Param::Float(f64::NAN),
            tolerance: None,
            status: Status::Fail,
            detail: None,
            series: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Param>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// Passes when `value ≤ tolerance`.
    pub fn bounded(mut self, value: f64, tolerance: f64) -> Self {
        self.value = Param::Float(value);
        self.tolerance = Some(tolerance);
        self.status = if value <= tolerance { Status::Pass } else { Status::Fail };
        self
    }

    /// Passes when the measured count equals the expected one.
    pub fn count(mut self, value: usize, expected: usize) -> Self {
        self.value = Param::from(value);
        self.params.insert("expected".into(), Param::from(expected));
        self.status = if value == expected { Status::Pass } else { Status::Fail };
        self
    }

    /// Passes when `value > threshold`; used for separation tests.
    pub fn exceeds(mut self, value: f64, threshold: f64) -> Self {
        self.value = Param::Float(value);
        self.tolerance = Some(threshold);
        self.params.insert("comparison".into(), Param::from("greater"));
        self.status = if value > threshold { Status::Pass } else { Status::Fail };
        self
    }

    pub fn informational(mut self, reason: &str) -> Self {
        self.status = Status::Informational;
        self.detail = Some(reason.to_string());
        self
    }

    /// Marks the check failed for a reason beyond its measured value.
    pub fn fail_because(mut self, reason: &str) -> Self {
        self.status = Status::Fail;
        self.detail = Some(reason.to_string());
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn with_series(mut self, series: Vec<(f64, f64)>) -> Self {
        self.series = series;
        self
    }

    /// Records a library error for this check.
    pub fn failed(mut self, err: &Error) -> Self {
        self.status = if matches!(err, Error::Resource(_)) {
            Status::ResourceFailure
        } else {
            Status::Fail
        };
        self.detail = Some(err.to_string());
        self
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("id".into(), Value::from(self.id.clone()));
        m.insert("anchor".into(), Value::from(self.anchor.clone()));
        m.insert(
            "params".into(),
            Value::Object(self.params.iter().map(|(k, v)| (k.clone(), v.to_json())).collect()),
        );
        m.insert("value".into(), self.value.to_json());
        m.insert("tolerance".into(), self.tolerance.map(float_value).unwrap_or(Value::Null));
        m.insert("status".into(), Value::from(self.status.label()));
        m.insert("detail".into(), self.detail.clone().map(Value::from).unwrap_or(Value::Null));
        if !self.series.is_empty() {
            m.insert(
                "series".into(),
                Value::Array(
                    self.series
                        .iter()
                        .map(|&(p, v)| Value::Array(vec![float_value(p), float_value(v)]))
                        .collect(),
                ),
            );
        }
        Value::Object(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub records: Vec<CheckRecord>,
    /// Configuration echo and version information.
    pub metadata: BTreeMap<String, Param>,
    pub runtime_seconds: f64,
}

impl Report {
    /// Every non-informational check passed.
    pub fn passed(&self) -> bool {
        self.records
            .iter()
            .all(|r| matches!(r.status, Status::Pass | Status::Informational))
    }

    pub fn record(&self, id: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn to_json(&self) -> String {
        let mut m = Map::new();
        m.insert(
            "metadata".into(),
            Value::Object(self.metadata.iter().map(|(k, v)| (k.clone(), v.to_json())).collect()),
        );
        m.insert(
            "records".into(),
            Value::Array(self.records.iter().map(CheckRecord::to_json).collect()),
        );
        m.insert("passed".into(), Value::from(self.passed()));
        let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("# superfock report\n\n");
        for (k, v) in &self.metadata {
            s.push_str(&format!("- {k}: {}\n", v.to_text()));
        }
        s.push_str(&format!("- runtime: {:.3} s\n\n", self.runtime_seconds));
        s.push_str("| check | anchor | value | tolerance | status | parameters |\n");
        s.push_str("|---|---|---|---|---|---|\n");
        for r in &self.records {
            let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={}", v.to_text())).collect();
            s.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} |\n",
                r.id,
                r.anchor,
                r.value.to_text(),
                r.tolerance.map(float_text).unwrap_or_else(|| "-".into()),
                r.status.label(),
                params.join(", ")
            ));
        }
        let notes: Vec<&CheckRecord> = self.records.iter().filter(|r| r.detail.is_some()).collect();
        if !notes.is_empty() {
            s.push_str("\n## Notes\n\n");
            for r in notes {
                s.push_str(&format!("- {}: {}\n", r.id, r.detail.as_deref().unwrap_or_default()));
            }
        }
        s
    }

    /// Writes `report.json`, `report.md` and `series/<id>.csv` under `dir`.
    pub fn emit(&self, dir: &Path, format: OutputFormat) -> Result<()> {
        let io = |e: std::io::Error, p: &Path| Error::Io(format!("{}: {e}", p.display()));
        fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
        if matches!(format, OutputFormat::Json | OutputFormat::Both) {
            let p = dir.join("report.json");
            fs::write(&p, self.to_json()).map_err(|e| io(e, &p))?;
        }
        if matches!(format, OutputFormat::Markdown | OutputFormat::Both) {
            let p = dir.join("report.md");
            fs::write(&p, self.to_markdown()).map_err(|e| io(e, &p))?;
        }
        let with_series: Vec<&CheckRecord> = self.records.iter().filter(|r| !r.series.is_empty()).collect();
        if !with_series.is_empty() {
            let sdir = dir.join("series");
            fs::create_dir_all(&sdir).map_err(|e| io(e, &sdir))?;
            for r in with_series {
                let mut csv = String::from("param,value\n");
                for &(p, v) in &r.series {
                    csv.push_str(&format!("{},{}\n", float_text(p), float_text(v)));
                }
                let p = sdir.join(format!("{}.csv", r.id));
                fs::write(&p, csv).map_err(|e| io(e, &p))?;
            }
        }
        Ok(())
    }
}
