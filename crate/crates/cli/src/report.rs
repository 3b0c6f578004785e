//! Report model and its JSON / CSV renderings.
//!
//! Every check reads `pass ⇔ value ≤ tol`; quantities that should be large
//! (e.g. a minimum eigenvalue) are negated before they are recorded.

use serde::Serialize;

use crate::commands::Results;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// `null` when the checked quantity is not finite, which always fails.
    pub value: Option<f64>,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value: value.is_finite().then_some(value),
            tol,
            pass: value.is_finite() && value <= tol,
        }
    }

    /// A yes/no condition, recorded as `0` (holds) or `1` (fails) against tolerance `0`.
    pub fn flag(name: impl Into<String>, holds: bool) -> Self {
        Self::new(name, if holds { 0.0 } else { 1.0 }, 0.0)
    }
}

/// Echo of everything that determines the report.
#[derive(Debug, Clone, Serialize)]
pub struct Inputs {
    pub graph: String,
    pub spec: pimsner::GraphSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub total_ms: f64,
}

/// Rows for `--format csv`; each command has one primary table.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: &'static str,
    pub inputs: Inputs,
    pub results: Results,
    pub checks: Vec<Check>,
    /// Names of the failing checks, in check order.
    pub failures: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
    #[serde(skip)]
    pub table: Table,
}

impl Report {
    pub fn new(command: &'static str, inputs: Inputs, results: Results, checks: Vec<Check>, table: Table) -> Self {
        let failures = checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            inputs,
            results,
            checks,
            failures,
            timings: None,
            table,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        write_csv(&self.table)
    }
}

pub fn write_csv(table: &Table) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&table.header).expect("in-memory write");
    for row in &table.rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Shortest round-trip decimal, with `inf`/`nan` spelled out for CSV cells.
pub fn num(x: f64) -> String {
    format!("{x}")
}
