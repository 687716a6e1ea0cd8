//! Scenario files, experiment runs, reports and the acceptance suite.
//!
//! A scenario is a JSON object whose `kind` selects one of `simulate`,
//! `limit_study`, `saturate`, `plan` or `stability`. [`run_file`] executes it
//! and [`write_run`] stores `report.json`, one CSV per table and any extra
//! artifacts in a fresh directory named after the scenario and the time.

mod criteria;
mod report;
mod run;
mod scenario;

pub use criteria::{generator_oracle, verify, Suite};
pub use report::{Artifact, Report, RunOutput, Table, Verdict};
pub use run::{run, run_batch, run_file};
pub use scenario::{
    Experiment, LimitStudyParams, PlanParams, Problem, SaturateParams, Scenario, SegmentSpec, SimulateParams, StabilityParams,
};

use std::path::{Path, PathBuf};

use crate::planner::PlannerError;
use crate::saturation::SaturationError;
use crate::solver::SolverError;
use crate::spectral::SpectralError;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unknown suite `{0}` (expected `fast` or `full`)")]
    UnknownSuite(String),
    #[error("export failed: {0}")]
    Export(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Saturation(#[from] SaturationError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

impl From<csv::Error> for ExperimentError {
    fn from(e: csv::Error) -> Self {
        ExperimentError::Export(e.to_string())
    }
}

impl From<std::io::Error> for ExperimentError {
    fn from(e: std::io::Error) -> Self {
        ExperimentError::Export(e.to_string())
    }
}

/// Writes `report.json`, `<table>.csv` for every table and the artifacts
/// into a new directory `<out>/<scenario>-<UTC timestamp>`.
pub fn write_run(out: &Path, output: &RunOutput) -> Result<PathBuf, ExperimentError> {
    let io = |path: &Path, e: std::io::Error| ExperimentError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let stem = format!(
        "{}-{}",
        sanitize(&output.report.scenario),
        chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ")
    );
    let mut dir = out.join(&stem);
    let mut n = 1;
    loop {
        match std::fs::create_dir(&dir) {
            Ok(()) => break,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                dir = out.join(format!("{stem}-{n}"));
                n += 1;
            }
            Err(e) => return Err(io(&dir, e)),
        }
    }
    let report = serde_json::to_string_pretty(&output.report).map_err(|e| ExperimentError::Export(e.to_string()))?;
    let path = dir.join("report.json");
    std::fs::write(&path, report).map_err(|e| io(&path, e))?;
    for (name, table) in &output.report.tables {
        let path = dir.join(format!("{}.csv", sanitize(name)));
        let file = std::fs::File::create(&path).map_err(|e| io(&path, e))?;
        table.write_csv(std::io::BufWriter::new(file))?;
    }
    for artifact in &output.artifacts {
        let path = dir.join(sanitize(&artifact.name));
        std::fs::write(&path, &artifact.contents).map_err(|e| io(&path, e))?;
    }
    Ok(dir)
}

fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect();
    if s.is_empty() {
        "run".into()
    } else {
        s
    }
}
