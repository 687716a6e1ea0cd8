use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use super::criteria::{blowup_verdict, invariance_verdict, limit_verdicts, saturation_verdict};
use super::report::{Artifact, Report, RunOutput, Table};
use super::scenario::{Experiment, Scenario};
use super::ExperimentError;
use crate::planner::{limit_study, plan, ImpulseKind, PlanSegment};
use crate::saturation::{saturate_with, GrowthMode};
use crate::solver::{resolve, stability_probe, Trajectory};
use crate::spectral::TrigField;

/// Reads, validates and runs one scenario file.
pub fn run_file(path: &Path) -> Result<RunOutput, ExperimentError> {
    run(&Scenario::load(path)?)
}

/// Runs independent scenarios concurrently; results keep the input order.
pub fn run_batch<P: AsRef<Path> + Sync>(paths: &[P]) -> Vec<Result<RunOutput, ExperimentError>> {
    paths.par_iter().map(|p| run_file(p.as_ref())).collect()
}

pub fn run(scenario: &Scenario) -> Result<RunOutput, ExperimentError> {
    let start = Instant::now();
    let config = serde_json::to_value(scenario).map_err(|e| ExperimentError::Export(e.to_string()))?;
    let mut report = Report::new(&scenario.name, scenario.experiment.kind(), config);
    let mut artifacts = Vec::new();
    match &scenario.experiment {
        Experiment::Simulate(p) => {
            let nl = scenario.nonlinearity()?;
            let traj = resolve(&scenario.sim_input(&p.segments)?, nl, &scenario.solver)?;
            match p.expect_blowup_in {
                Some(window) => report.verdicts.push(blowup_verdict(traj.status, window)),
                None => report.verdicts.push(super::Verdict::new(
                    "completed",
                    traj.is_completed(),
                    format!("{:?}", traj.status),
                )),
            }
            if let (Some(tol), Some(set)) = (p.expect_lattice_invariance, &scenario.control_set) {
                report.verdicts.push(invariance_verdict(&traj, set, tol));
            }
            report.tables.insert("norm".into(), norm_table(&traj));
            artifacts.push(trajectory_artifact(&traj, p.report_cutoff.unwrap_or(scenario.solver.cutoff))?);
            report.summary = serde_json::to_value(traj.summary()).map_err(export)?;
        }
        Experiment::LimitStudy(p) => {
            let nl = scenario.nonlinearity()?;
            let eta = p.eta.clone().unwrap_or_else(|| TrigField::zero(scenario.dim));
            let study = limit_study(
                &scenario.initial(),
                &p.zeta,
                &eta,
                &scenario.forcing(),
                nl,
                &scenario.solver,
                &p.deltas,
            )?;
            let floor = p.min_slope.unwrap_or(1.0 / nl.degree() as f64 - 0.15);
            report.verdicts.extend(limit_verdicts(&scenario.name, &study, floor));
            report.tables.insert("limit_error".into(), limit_table(&study));
            report.summary = json!({
                "slope": study.slope,
                "intercept": study.intercept,
                "monotone": study.monotone,
                "smallest_error": study.smallest_error(),
                "extrapolation_rate": study.extrapolation_rate,
                "extrapolation_error": study.extrapolation_error,
                "blown_up": study.rows.iter().filter(|r| r.blown_up_at.is_some()).map(|r| json!({"delta": r.delta, "t": r.blown_up_at})).collect::<Vec<_>>(),
                "ideal": study.ideal,
            });
        }
        Experiment::Saturate(p) => {
            let set = scenario.control_set.as_ref().expect("validated");
            let degree = match p.degree {
                Some(d) => d,
                None => scenario.nonlinearity()?.degree(),
            };
            let trace = saturate_with(set, degree, p.cutoff, p.max_levels, p.growth.unwrap_or(GrowthMode::Pairwise))?;
            let (verdict, facts) = saturation_verdict(set, &trace);
            report.verdicts.push(verdict);
            let mut columns = vec!["level".to_string()];
            columns.extend((0..scenario.dim).map(|i| format!("k{i}")));
            let mut levels = Table::new(columns);
            for k in trace.last().iter() {
                let mut row = vec![trace.level_of(k).expect("member of the last level") as f64];
                row.extend(k.components().iter().map(|&c| c as f64));
                levels.push(row);
            }
            levels.rows.sort_by(|a, b| a.partial_cmp(b).expect("finite entries"));
            let mut sizes = Table::new(["level", "size"]);
            for (i, level) in trace.levels.iter().enumerate() {
                sizes.push(vec![i as f64, level.len() as f64]);
            }
            report.tables.insert("levels".into(), levels);
            report.tables.insert("level_sizes".into(), sizes);
            report.summary = json!({
                "covered": trace.covered,
                "fixpoint": trace.fixpoint,
                "levels": trace.levels.len(),
                "working_radius": trace.working_radius,
                "facts": facts,
            });
        }
        Experiment::Plan(p) => {
            let nl = scenario.nonlinearity()?;
            let cfg = scenario.planner_config(p);
            let eps = scenario.epsilon.expect("validated");
            let outcome = plan(
                &scenario.initial(),
                scenario.u1.as_ref().expect("validated"),
                eps,
                scenario.horizon.expect("validated"),
                scenario.control_set.as_ref().expect("validated"),
                nl,
                &cfg,
            )?;
            let r = &outcome.report;
            report.verdicts.push(super::Verdict::new(
                "C5",
                r.achieved_error < eps && (!cfg.lower || r.eta_only),
                format!(
                    "terminal error {:.3e} against tolerance {eps:e}, eta-only: {}",
                    r.achieved_error, r.eta_only
                ),
            ));
            report.tables.insert("norm".into(), norm_table(&outcome.trajectory));
            let mut segments = Table::new(["start", "duration", "impulse", "eta_only"]);
            let mut t = 0.0;
            for seg in &outcome.plan.segments {
                let (impulse, eta_only) = match seg {
                    PlanSegment::Impulse(s) => (1.0, (s.kind == ImpulseKind::EtaOnly) as u8 as f64),
                    PlanSegment::Coast(_) => (0.0, 0.0),
                };
                segments.push(vec![t, seg.duration(), impulse, eta_only]);
                t += seg.duration();
            }
            report.tables.insert("segments".into(), segments);
            let mut records = Table::new(["level", "delta", "budget", "error", "probes"]);
            for rec in &r.segment_errors {
                records.push(vec![rec.level as f64, rec.delta, rec.budget, rec.error, rec.probes as f64]);
            }
            report.tables.insert("segment_errors".into(), records);
            artifacts.push(Artifact {
                name: "plan.json".into(),
                contents: serde_json::to_string_pretty(&outcome.plan.to_json()).map_err(export)?,
            });
            artifacts.push(trajectory_artifact(&outcome.trajectory, cfg.plan_cutoff.max(1))?);
            report.summary = serde_json::to_value(r).map_err(export)?;
        }
        Experiment::Stability(p) => {
            let nl = scenario.nonlinearity()?;
            let base = scenario.sim_input(&p.segments)?;
            let unit = p.direction.size(scenario.solver.s, base.horizon());
            if !(unit > 0.0) {
                return Err(ExperimentError::Invalid("perturbation direction is zero".into()));
            }
            let perturbations: Vec<_> = p.sizes.iter().map(|s| p.direction.scale(s / unit)).collect();
            let probe = stability_probe(&base, nl, &scenario.solver, &perturbations)?;
            report.verdicts.push(super::Verdict::new(
                "C6",
                probe.ratio_change < p.max_ratio_change,
                format!(
                    "ratio change {:.3e} between the two smallest sizes (limit {})",
                    probe.ratio_change, p.max_ratio_change
                ),
            ));
            let mut rows = Table::new(["size", "deviation", "ratio"]);
            let mut plot = Table::new(["size", "ratio"]);
            for row in &probe.rows {
                rows.push(vec![row.size, row.deviation, row.ratio]);
                plot.push(vec![row.size, row.ratio]);
            }
            report.tables.insert("stability".into(), rows);
            report.tables.insert("ratio".into(), plot);
            report.summary = json!({
                "lambda": probe.lambda,
                "ratio_change": probe.ratio_change,
                "stabilized": probe.stabilized,
            });
        }
    }
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(RunOutput { report, artifacts })
}

fn export(e: serde_json::Error) -> ExperimentError {
    ExperimentError::Export(e.to_string())
}

pub(crate) fn norm_table(traj: &Trajectory) -> Table {
    let mut table = Table::new(["t", "norm"]);
    for (t, n) in traj.times.iter().zip(&traj.norms) {
        table.push(vec![*t, *n]);
    }
    table
}

pub(crate) fn limit_table(study: &crate::planner::LimitStudy) -> Table {
    let mut table = Table::new(["delta", "error"]);
    for row in &study.rows {
        if let Some(e) = row.error {
            table.push(vec![row.delta, e]);
        }
    }
    table
}

fn trajectory_artifact(traj: &Trajectory, cutoff: i64) -> Result<Artifact, ExperimentError> {
    let mut buf = Vec::new();
    traj.write_csv(&mut buf, cutoff)?;
    Ok(Artifact {
        name: "trajectory.csv".into(),
        contents: String::from_utf8(buf).expect("csv output is UTF-8"),
    })
}

