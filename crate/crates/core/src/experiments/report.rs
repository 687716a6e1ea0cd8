use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ExperimentError;

/// Outcome of one check. `criterion` names the property being checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(criterion: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            criterion: criterion.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// A numeric table; exported as CSV. Two-column tables double as plot data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub kind: String,
    pub version: String,
    pub verdicts: Vec<Verdict>,
    pub tables: BTreeMap<String, Table>,
    /// Kind-specific scalar results.
    pub summary: serde_json::Value,
    pub runtime_seconds: f64,
    /// The parsed scenario (or suite parameters) the run used.
    pub config: serde_json::Value,
}

impl Report {
    pub fn new(scenario: impl Into<String>, kind: impl Into<String>, config: serde_json::Value) -> Self {
        Report {
            scenario: scenario.into(),
            kind: kind.into(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            verdicts: Vec::new(),
            tables: BTreeMap::new(),
            summary: serde_json::Value::Null,
            runtime_seconds: 0.0,
            config,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.passed)
    }
}

/// A file written next to `report.json`, beyond the tables.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub report: Report,
    pub artifacts: Vec<Artifact>,
}
