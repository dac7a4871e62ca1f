//! Machine-readable experiment output: pass checks, JSON reports and CSV
//! series, all numbers written with 17 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::ser::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::Result;

/// Full-precision number that serializes as `{:.16e}`, or `null` when not
/// finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "nan".to_string()
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
}

/// One pass flag: `metric` compared against `tolerance`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub metric: String,
    pub value: Num,
    pub comparison: Comparison,
    pub tolerance: Num,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, metric: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            metric: metric.into(),
            value: Num(value),
            comparison: Comparison::AtMost,
            tolerance: Num(tolerance),
            passed: value <= tolerance,
        }
    }

    pub fn at_least(name: &str, metric: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            metric: metric.into(),
            value: Num(value),
            comparison: Comparison::AtLeast,
            tolerance: Num(tolerance),
            passed: value >= tolerance,
        }
    }

    /// A boolean metric recorded as 1 or 0 that must be 1.
    pub fn holds(name: &str, metric: &str, value: bool) -> Self {
        Self::at_least(name, metric, if value { 1.0 } else { 0.0 }, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format_number(*v),
        }
    }
}

/// Fixed-column table written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    /// CSV text preceded by one `#` comment line naming the scenario and
    /// seed.
    pub fn render(&self, scenario: &str, seed: u64) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# scenario={scenario} seed={seed}");
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub type SeriesRecord = BTreeMap<String, Num>;

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub scenario: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    /// Per-cutoff or per-f records, keyed by series name.
    pub series: BTreeMap<String, Vec<SeriesRecord>>,
    pub table: CsvTable,
}

#[derive(serde::Serialize)]
struct PassBlock<'a> {
    all: bool,
    checks: &'a [Check],
}

#[derive(serde::Serialize)]
struct ReportJson<'a> {
    scenario: &'a str,
    params: &'a BTreeMap<String, String>,
    seed: u64,
    metrics: BTreeMap<&'a str, Num>,
    pass: PassBlock<'a>,
    series: &'a BTreeMap<String, Vec<SeriesRecord>>,
}

impl Report {
    pub fn new(scenario: &str, params: BTreeMap<String, String>, seed: u64, table: CsvTable) -> Self {
        Self { scenario: scenario.into(), params, seed, metrics: BTreeMap::new(), checks: Vec::new(), series: BTreeMap::new(), table }
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn record(&mut self, series: &str, record: &[(&str, f64)]) {
        let rec = record.iter().map(|(k, v)| (k.to_string(), Num(*v))).collect();
        self.series.entry(series.into()).or_default().push(rec);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let json = ReportJson {
            scenario: &self.scenario,
            params: &self.params,
            seed: self.seed,
            metrics: self.metrics.iter().map(|(k, v)| (k.as_str(), Num(*v))).collect(),
            pass: PassBlock { all: self.passed(), checks: &self.checks },
            series: &self.series,
        };
        let mut text = serde_json::to_string_pretty(&json).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn to_csv(&self) -> String {
        self.table.render(&self.scenario, self.seed)
    }

    /// Writes `<scenario>_series.csv` and `<scenario>_report.json`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{}_series.csv", self.scenario));
        let json = dir.join(format!("{}_report.json", self.scenario));
        std::fs::write(&csv, self.to_csv())?;
        std::fs::write(&json, self.to_json())?;
        Ok((csv, json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_number(-2.0), "-2.0000000000000000e0");
        let back: f64 = format_number(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn json_schema() {
        let mut table = CsvTable::new(&["f", "value"]);
        table.push(vec![Cell::Real(0.5), Cell::Real(f64::NAN)]);
        let mut r = Report::new("demo", BTreeMap::from([("n_max".into(), "2".into())]), 7, table);
        r.metric("x", 1.5);
        r.metric("missing", f64::NAN);
        r.check(Check::at_most("small", "x", 1.5, 2.0));
        r.record("scan", &[("f", 0.1)]);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["scenario", "params", "seed", "metrics", "pass", "series"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["metrics"]["x"], 1.5);
        assert!(v["metrics"]["missing"].is_null());
        assert_eq!(v["pass"]["all"], true);
        assert_eq!(v["seed"], 7);
        let csv = r.to_csv();
        assert_eq!(csv.lines().next().unwrap(), "# scenario=demo seed=7");
        assert_eq!(csv.lines().nth(2).unwrap(), "5.0000000000000000e-1,nan");
    }
}
