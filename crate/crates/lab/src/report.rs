//! Checks, data tables and their serialization.
//!
//! Output bytes depend only on the run configuration: results keep the
//! order in which the run produced them, JSON objects have fixed field
//! order, and every float is written with 17 significant digits.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use kreisslab_core::kreiss::{ClaimCheckResult, ClaimStatus};
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::config::{OutputFormat, RunConfig};
use crate::error::Result;

/// One verified statement, possibly aggregated over many instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The inequality or identity being checked, as a formula.
    pub anchor: String,
    pub params: Value,
    /// Left-hand side of the tightest instance.
    pub value: f64,
    pub bound: f64,
    /// Slack in the direction of the inequality for the tightest instance.
    pub margin: f64,
    pub instances: usize,
    pub failures: usize,
    pub vacuous: usize,
    pub status: ClaimStatus,
    pub pass: bool,
    /// Informational entries are reported but never decide the exit code.
    pub gated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tightest: Option<ClaimCheckResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
    /// `value < bound` with no slack
    Below,
}

/// `(params, value, bound)` for one instance of a sweep.
pub type Instance = (Value, f64, f64);

impl Check {
    fn single(name: &str, anchor: &str, value: f64, bound: f64, rel: Relation, slack: f64) -> Self {
        let margin = match rel {
            Relation::AtMost | Relation::Below => bound - value,
            Relation::AtLeast => value - bound,
        };
        let pass = match rel {
            Relation::Below => margin > 0.0,
            _ => margin >= -slack * bound.abs(),
        };
        Self {
            name: name.to_string(),
            anchor: anchor.to_string(),
            params: Value::Object(Default::default()),
            value,
            bound,
            margin,
            instances: 1,
            failures: usize::from(!pass),
            vacuous: 0,
            status: if pass { ClaimStatus::Pass } else { ClaimStatus::Fail },
            pass,
            gated: true,
            tightest: None,
            details: None,
        }
    }

    pub fn at_most(name: &str, anchor: &str, value: f64, bound: f64, slack: f64) -> Self {
        Self::single(name, anchor, value, bound, Relation::AtMost, slack)
    }

    pub fn at_least(name: &str, anchor: &str, value: f64, bound: f64, slack: f64) -> Self {
        Self::single(name, anchor, value, bound, Relation::AtLeast, slack)
    }

    pub fn below(name: &str, anchor: &str, value: f64, bound: f64) -> Self {
        Self::single(name, anchor, value, bound, Relation::Below, 0.0)
    }

    /// A yes/no fact, recorded as `value = 1` against `bound = 1`.
    pub fn holds(name: &str, anchor: &str, ok: bool) -> Self {
        Self::single(name, anchor, if ok { 1.0 } else { 0.0 }, 1.0, Relation::AtLeast, 0.0)
    }

    /// Many instances of one inequality; reports the tightest (smallest
    /// relative margin, first on ties) and counts failures.
    pub fn sweep(
        name: &str,
        anchor: &str,
        rel: Relation,
        slack: f64,
        instances: impl IntoIterator<Item = Instance>,
    ) -> Self {
        let mut count = 0;
        let mut failures = 0;
        let mut tightest: Option<(f64, Check)> = None;
        for (params, value, bound) in instances {
            let mut c = Self::single(name, anchor, value, bound, rel, slack);
            c.params = params;
            count += 1;
            failures += c.failures;
            let r = relative(c.margin, c.bound);
            if tightest.as_ref().is_none_or(|(t, _)| r < *t) {
                tightest = Some((r, c));
            }
        }
        match tightest {
            Some((_, mut c)) => {
                c.instances = count;
                c.failures = failures;
                c.pass = failures == 0;
                c.status = if c.pass { ClaimStatus::Pass } else { ClaimStatus::Fail };
                c
            }
            None => {
                let mut c = Self::single(name, anchor, 0.0, 0.0, rel, slack);
                c.instances = 0;
                c
            }
        }
    }

    /// Aggregate of claim-checker results; vacuous instances count as
    /// passes but are tallied separately.
    pub fn from_claims(name: &str, anchor: &str, results: &[ClaimCheckResult]) -> Self {
        let judged: Vec<&ClaimCheckResult> = results
            .iter()
            .filter(|r| r.status != ClaimStatus::VacuousPass)
            .collect();
        let vacuous = results.len() - judged.len();
        let failures = judged.iter().filter(|r| !r.pass).count();
        let tightest = judged
            .iter()
            .copied()
            .reduce(|a, b| if b.relative_margin() < a.relative_margin() { b } else { a })
            .or(results.first())
            .copied();
        let pass = failures == 0;
        let status = match tightest {
            _ if !pass => ClaimStatus::Fail,
            Some(t) if t.status == ClaimStatus::HypothesisFails => ClaimStatus::HypothesisFails,
            _ if judged.is_empty() && vacuous > 0 => ClaimStatus::VacuousPass,
            _ => ClaimStatus::Pass,
        };
        Self {
            name: name.to_string(),
            anchor: anchor.to_string(),
            params: Value::Object(Default::default()),
            value: tightest.map_or(0.0, |t| t.lhs),
            bound: tightest.map_or(0.0, |t| t.bound),
            margin: tightest.map_or(0.0, |t| t.margin),
            instances: results.len(),
            failures,
            vacuous,
            status,
            pass: pass && status != ClaimStatus::HypothesisFails,
            gated: true,
            tightest,
            details: None,
        }
    }

    pub fn with_params(mut self, params: Value) -> Self {
        self.params = params;
        self
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn informational(mut self) -> Self {
        self.gated = false;
        self
    }

    /// One-line human summary.
    pub fn line(&self) -> String {
        let verdict = match (self.gated, self.pass) {
            (false, _) => "INFO",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        let mut s = format!(
            "{verdict} {}: {} (value {:.6e}, bound {:.6e}, {} instance(s)",
            self.name, self.anchor, self.value, self.bound, self.instances
        );
        if self.failures > 0 {
            s.push_str(&format!(", {} failed", self.failures));
        }
        if self.vacuous > 0 {
            s.push_str(&format!(", {} vacuous", self.vacuous));
        }
        s.push(')');
        s
    }
}

fn relative(margin: f64, bound: f64) -> f64 {
    if bound == 0.0 {
        margin
    } else {
        margin / bound.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VacuousEntry {
    pub name: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub checks: usize,
    pub gated: usize,
    pub passed: usize,
    pub failed: usize,
    pub informational: usize,
    pub vacuous_passes: Vec<VacuousEntry>,
    pub all_pass: bool,
}

impl Summary {
    pub fn of(results: &[Check]) -> Self {
        let gated: Vec<&Check> = results.iter().filter(|c| c.gated).collect();
        let passed = gated.iter().filter(|c| c.pass).count();
        Self {
            checks: results.len(),
            gated: gated.len(),
            passed,
            failed: gated.len() - passed,
            informational: results.len() - gated.len(),
            vacuous_passes: results
                .iter()
                .filter(|c| c.vacuous > 0)
                .map(|c| VacuousEntry {
                    name: c.name.clone(),
                    count: c.vacuous,
                })
                .collect(),
            all_pass: passed == gated.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub results: Vec<Check>,
    pub summary: Summary,
}

impl Report {
    pub fn new(config: RunConfig, results: Vec<Check>) -> Self {
        let summary = Summary::of(&results);
        Self {
            config,
            results,
            summary,
        }
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(!self.summary.all_pass)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Self::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Self::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::Bool(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Float(v) => format_float(*v),
            Self::Text(s) => s.clone(),
            Self::Bool(b) => b.to_string(),
        }
    }
}

/// A CSV data table; `name` is the file stem.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.headers.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
        out.write_record(&self.headers)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::render))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// 17 significant digits, so every value reads back bit-exactly.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Pretty JSON with floats in [`format_float`] form.
struct FixedDigits<'a>(PrettyFormatter<'a>);

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(format_float(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(buf)
}

/// Writes `report.json` and one CSV per table into `dir`, as selected by
/// `format`. Returns the paths written, in order.
pub fn emit_report(report: &Report, tables: &[Table], dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if format.json() {
        let path = dir.join("report.json");
        fs::write(&path, to_json_bytes(report)?)?;
        written.push(path);
    }
    if format.csv() {
        for t in tables {
            let path = dir.join(format!("{}.csv", t.name));
            t.write_csv(fs::File::create(&path)?)?;
            written.push(path);
        }
    }
    Ok(written)
}
