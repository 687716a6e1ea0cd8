use std::collections::{HashSet, VecDeque};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use super::report::{Report, RunOutput, Table, Verdict};
use super::run::{limit_table, norm_table};
use super::ExperimentError;
use crate::planner::{limit_study_against, plan, LimitStudy, PlannerConfig};
use crate::saturation::{
    decompose_mode, gcd_determinant, is_generator, lattice_span, saturate, FrequencySet, SaturationTrace,
};
use crate::solver::{
    resolve, stability_probe, NonlinearitySpec, Perturbation, Segment, SimInput, SolverConfig, Status, Trajectory,
};
use crate::spectral::{Frequency, Phase, TrigField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Every acceptance criterion.
    Fast,
    /// The fast suite plus a sign-flip mutation check and a determinism check.
    Full,
}

impl FromStr for Suite {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fast" => Ok(Suite::Fast),
            "full" => Ok(Suite::Full),
            other => Err(ExperimentError::UnknownSuite(other.to_string())),
        }
    }
}

pub const LIMIT_DELTAS: [f64; 7] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5];

/// Results of one criterion.
#[derive(Default)]
struct Part {
    verdicts: Vec<Verdict>,
    tables: Vec<(String, Table)>,
    summary: serde_json::Map<String, serde_json::Value>,
}

type Check = fn() -> Result<Part, ExperimentError>;

/// Runs the acceptance suite. Criteria run concurrently and each is checked
/// against its own time limit as well as its tolerance.
pub fn verify(suite: Suite) -> Result<RunOutput, ExperimentError> {
    let start = Instant::now();
    let mut checks: Vec<(&str, f64, Check)> = vec![
        ("C1+C2", 60.0, limit_criteria),
        ("C3", 120.0, saturation_criterion),
        ("C4", 10.0, invariance_criterion),
        ("C5", 600.0, steering_criterion),
        ("C6", 30.0, stability_criterion),
        ("C7", 10.0, blowup_criterion),
        ("C8", 10.0, recipe_criterion),
    ];
    if suite == Suite::Full {
        checks.push(("M1", 120.0, mutation_check));
        checks.push(("D1", 600.0, determinism_check));
    }
    let parts: Vec<(String, f64, f64, Result<Part, ExperimentError>)> = checks
        .par_iter()
        .map(|&(id, limit, check)| {
            let t0 = Instant::now();
            let part = check();
            (id.to_string(), limit, t0.elapsed().as_secs_f64(), part)
        })
        .collect();

    let config = json!({ "suite": suite, "limit_deltas": LIMIT_DELTAS });
    let name = match suite {
        Suite::Fast => "verify-fast",
        Suite::Full => "verify-full",
    };
    let mut report = Report::new(name, "verify", config);
    let mut summary = serde_json::Map::new();
    let mut timing = Table::new(["check", "seconds", "limit_seconds"]);
    summary.insert("checks".into(), json!(parts.iter().map(|p| p.0.clone()).collect::<Vec<_>>()));
    for (i, (id, limit, seconds, part)) in parts.into_iter().enumerate() {
        timing.push(vec![i as f64, seconds, limit]);
        match part {
            Ok(part) => {
                let within = seconds <= limit;
                for mut v in part.verdicts {
                    v.passed &= within;
                    v.detail = format!("{} [{seconds:.1} s, limit {limit} s]", v.detail);
                    report.verdicts.push(v);
                }
                report.tables.extend(part.tables);
                summary.insert(id, serde_json::Value::Object(part.summary));
            }
            Err(e) => {
                let criterion = id.split('+').next().unwrap_or(&id).to_string();
                report.verdicts.push(Verdict::new(criterion, false, format!("error: {e}")));
            }
        }
    }
    report.tables.insert("timing".into(), timing);
    report.summary = serde_json::Value::Object(summary);
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(RunOutput {
        report,
        artifacts: Vec::new(),
    })
}

/// Checks a limit study against the decay and target criteria.
pub(crate) fn limit_verdicts(label: &str, study: &LimitStudy, min_slope: f64) -> Vec<Verdict> {
    let slope = study.slope.unwrap_or(f64::NAN);
    let decay = Verdict::new(
        "C1",
        study.monotone && slope >= min_slope,
        format!(
            "{label}: slope {slope:.3} (floor {min_slope:.3}), strictly decreasing: {}",
            study.monotone
        ),
    );
    let target = match (study.extrapolation_error, study.smallest_error()) {
        (Some(err), Some(e_min)) => Verdict::new(
            "C2",
            err <= 3.0 * e_min,
            format!("{label}: extrapolated endpoint off by {err:.3e}, allowance {:.3e}", 3.0 * e_min),
        ),
        _ => Verdict::new("C2", false, format!("{label}: no completed runs to extrapolate from")),
    };
    vec![decay, target]
}

pub(crate) fn blowup_verdict(status: Status, [lo, hi]: [f64; 2]) -> Verdict {
    match status {
        Status::BlownUpAt(t) => Verdict::new(
            "C7",
            (lo..=hi).contains(&t),
            format!("blow-up detected at t = {t:.5}, expected in [{lo}, {hi}]"),
        ),
        Status::Completed => Verdict::new("C7", false, "run completed without blow-up"),
    }
}

/// Largest coefficient, over all recorded states, at a frequency outside the
/// lattice spanned by `set`.
fn off_lattice_max(traj: &Trajectory, set: &FrequencySet) -> f64 {
    let lattice = lattice_span(set);
    traj.states
        .iter()
        .flat_map(|u| u.iter())
        .filter(|(k, _)| !lattice.contains(k))
        .map(|(_, m)| m.cos.abs().max(m.sin.abs()))
        .fold(0.0, f64::max)
}

pub(crate) fn invariance_verdict(traj: &Trajectory, set: &FrequencySet, tol: f64) -> Verdict {
    let worst = off_lattice_max(traj, set);
    Verdict::new(
        "C4",
        traj.is_completed() && worst < tol,
        format!(
            "largest coefficient outside the control lattice {worst:.3e} (limit {tol:e}), {:?}",
            traj.status
        ),
    )
}

/// Cross-checks the three generator tests on one set.
pub(crate) fn saturation_verdict(set: &FrequencySet, trace: &SaturationTrace) -> (Verdict, serde_json::Value) {
    let gcd = gcd_determinant(set).ok();
    let generator = is_generator(set);
    let oracle = (set.dim() <= 3).then(|| generator_oracle(set, oracle_radius(set.dim())));
    let agree = gcd.is_none_or(|g| (g == 1) == generator)
        && oracle.is_none_or(|o| o == generator)
        && trace.covered == generator;
    let facts = json!({ "gcd": gcd, "generator": generator, "oracle": oracle, "covered": trace.covered });
    let detail = format!(
        "gcd {gcd:?}, generator {generator}, enumeration {oracle:?}, covers box {}: {}",
        trace.box_cutoff, trace.covered
    );
    (Verdict::new("C3", agree, detail), facts)
}

fn oracle_radius(dim: usize) -> i64 {
    match dim {
        1 => 16,
        2 => 10,
        _ => 5,
    }
}

/// Whether every unit vector is a sum of elements of `set`, found by
/// breadth-first search over the box `|k|_inf <= radius`.
pub fn generator_oracle(set: &FrequencySet, radius: i64) -> bool {
    let dim = set.dim();
    let steps: Vec<&[i64]> = set.iter().map(|k| k.components()).filter(|k| k.iter().any(|&c| c != 0)).collect();
    let origin = vec![0i64; dim];
    let mut seen: HashSet<Vec<i64>> = HashSet::from([origin.clone()]);
    let mut queue = VecDeque::from([origin]);
    while let Some(k) = queue.pop_front() {
        for step in &steps {
            let next: Vec<i64> = k.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if next.iter().all(|c| c.abs() <= radius) && seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    (0..dim).all(|i| {
        let mut e = vec![0i64; dim];
        e[i] = 1;
        seen.contains(&e)
    })
}

fn limit_nonlinearities() -> Result<Vec<(String, NonlinearitySpec)>, ExperimentError> {
    let mut out = Vec::new();
    for g in ["zero", "tanh"] {
        out.push((format!("p=3,g={g}"), NonlinearitySpec::new(vec![0.0, 0.0, 0.0, 1.0], g)?));
        out.push((format!("p=2,g={g}"), NonlinearitySpec::new(vec![0.0, 1.0, 1.0], g)?));
    }
    Ok(out)
}

fn limit_study_for(dynamics: &NonlinearitySpec, model: &NonlinearitySpec) -> Result<LimitStudy, ExperimentError> {
    let cfg = SolverConfig::default();
    Ok(limit_study_against(
        &TrigField::zero(1),
        &TrigField::cos([1], 1.0),
        &TrigField::sin([1], 1.0),
        &TrigField::zero(1),
        dynamics,
        model,
        &cfg,
        &LIMIT_DELTAS,
    )?)
}

fn slope_floor(nl: &NonlinearitySpec) -> f64 {
    1.0 / nl.degree() as f64 - 0.15
}

fn limit_criteria() -> Result<Part, ExperimentError> {
    let mut part = Part::default();
    for (label, nl) in limit_nonlinearities()? {
        let study = limit_study_for(&nl, &nl)?;
        part.verdicts.extend(limit_verdicts(&label, &study, slope_floor(&nl)));
        part.tables.push((format!("limit_error_{}", label.replace([',', '='], "_")), limit_table(&study)));
        part.summary.insert(
            label,
            json!({
                "slope": study.slope,
                "monotone": study.monotone,
                "extrapolation_error": study.extrapolation_error,
                "smallest_error": study.smallest_error(),
            }),
        );
    }
    Ok(part)
}

/// The limit criteria must reject dynamics whose nonlinearity has the wrong sign.
fn mutation_check() -> Result<Part, ExperimentError> {
    let mut part = Part::default();
    for (label, nl) in limit_nonlinearities()? {
        let study = limit_study_for(&nl.negated(), &nl)?;
        let verdicts = limit_verdicts(&label, &study, slope_floor(&nl));
        let caught = verdicts.iter().any(|v| !v.passed);
        part.verdicts.push(Verdict::new(
            "M1",
            caught,
            format!(
                "{label} with flipped sign: limit criteria {}",
                if caught { "fail as expected" } else { "still pass" }
            ),
        ));
        part.summary.insert(label, json!({ "slope": study.slope, "monotone": study.monotone }));
    }
    Ok(part)
}

/// Symmetric sets containing the origin inside `{-2..2}^2` with at most 9 elements.
fn small_symmetric_sets() -> Vec<FrequencySet> {
    let mut pairs = Vec::new();
    for a in -2i64..=2 {
        for b in -2i64..=2 {
            let k = Frequency::from([a, b]);
            if !k.is_zero() && k.is_canonical() {
                pairs.push(k);
            }
        }
    }
    let mut sets = Vec::new();
    let n = pairs.len();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() > 4 {
            continue;
        }
        let chosen = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| pairs[i].clone());
        sets.push(FrequencySet::symmetric(2, chosen).expect("valid symmetric set"));
    }
    sets
}

fn saturation_criterion() -> Result<Part, ExperimentError> {
    let sets = small_symmetric_sets();
    let mut table = Table::new(["size", "gcd", "generator", "oracle", "covered_p2", "covered_p3"]);
    let mut mismatches = Vec::new();
    for set in &sets {
        let gcd = gcd_determinant(set)?;
        let generator = is_generator(set);
        let oracle = generator_oracle(set, oracle_radius(2));
        let p2 = saturate(set, 2, 4, 64)?.covered;
        let p3 = saturate(set, 3, 4, 64)?.covered;
        if !((gcd == 1) == generator && oracle == generator && p2 == generator && p3 == generator) {
            mismatches.push(format!("{:?}", set.canonical_nonzero()));
        }
        let flag = |b: bool| b as u8 as f64;
        table.push(vec![set.len() as f64, gcd as f64, flag(generator), flag(oracle), flag(p2), flag(p3)]);
    }
    let generators = table.rows.iter().filter(|r| r[2] == 1.0).count();
    let mut part = Part::default();
    part.verdicts.push(Verdict::new(
        "C3",
        mismatches.is_empty(),
        format!(
            "{} sets, {generators} generators, {} disagreements{}",
            sets.len(),
            mismatches.len(),
            mismatches.first().map(|m| format!(", first {m}")).unwrap_or_default()
        ),
    ));
    part.tables.push(("saturation_sets".into(), table));
    part.summary.insert("sets".into(), json!(sets.len()));
    part.summary.insert("generators".into(), json!(generators));
    Ok(part)
}

fn invariance_criterion() -> Result<Part, ExperimentError> {
    let set = FrequencySet::symmetric(1, [Frequency::from([2])])?;
    let cfg = SolverConfig {
        record_stride: 10,
        ..SolverConfig::default()
    };
    let segments = vec![
        Segment::coast(1, 0.5)
            .with_zeta(TrigField::cos([2], 1.0))
            .with_eta(TrigField::sin([2], 1.0))
            .with_h(TrigField::constant(1, 0.2)),
        Segment::coast(1, 0.5)
            .with_zeta(&TrigField::sin([2], 0.5) + &TrigField::constant(1, 0.3))
            .with_h(TrigField::cos([2], 1.0)),
    ];
    let input = SimInput::new(TrigField::cos([2], 0.5), segments)?;
    let traj = resolve(&input, &NonlinearitySpec::monomial(3, 1.0)?, &cfg)?;
    let mut part = Part::default();
    part.verdicts.push(invariance_verdict(&traj, &set, 1e-10));
    part.summary
        .insert("max_off_lattice".into(), json!(off_lattice_max(&traj, &set)));
    Ok(part)
}

fn steering_config() -> PlannerConfig {
    PlannerConfig {
        solver: SolverConfig {
            nu: 0.1,
            cutoff: 32,
            blowup_threshold: 1e12,
            ..SolverConfig::default()
        },
        ..PlannerConfig::default()
    }
}

fn steering_run() -> Result<crate::planner::PlanOutcome, ExperimentError> {
    let nl = NonlinearitySpec::new(vec![0.0, 0.0, 0.0, 1.0], "tanh")?;
    let cfg = steering_config();
    let u1 = (&TrigField::sin([2], 1.0) + &TrigField::cos([3], 0.5)).project_box(cfg.solver.cutoff);
    let set = FrequencySet::symmetric(1, [Frequency::from([1])])?;
    Ok(plan(&TrigField::zero(1), &u1, 0.1, 1.0, &set, &nl, &cfg)?)
}

fn steering_criterion() -> Result<Part, ExperimentError> {
    let out = steering_run()?;
    let r = &out.report;
    let mut part = Part::default();
    part.verdicts.push(Verdict::new(
        "C5",
        r.achieved_error < 0.1 && r.eta_only && (out.plan.total_time - 1.0).abs() < 1e-9,
        format!(
            "terminal error {:.3e} (limit 0.1), eta-only {}, total time {}",
            r.achieved_error, r.eta_only, out.plan.total_time
        ),
    ));
    part.tables.push(("steering_norm".into(), norm_table(&out.trajectory)));
    part.summary.insert("report".into(), serde_json::to_value(r).unwrap_or_default());
    Ok(part)
}

fn stability_criterion() -> Result<Part, ExperimentError> {
    let cfg = SolverConfig::default();
    let base = SimInput::new(
        TrigField::cos([1], 1.0),
        vec![Segment::coast(1, 0.5)
            .with_zeta(TrigField::cos([1], 0.5))
            .with_h(TrigField::sin([1], 1.0))],
    )?;
    let direction = Perturbation {
        du0: &TrigField::cos([1], 1.0) + &TrigField::sin([2], 0.5),
        dzeta: TrigField::cos([1], 0.2),
        dphi: TrigField::sin([1], 1.0),
    };
    let unit = direction.size(cfg.s, base.horizon());
    let sizes = [1e-2, 1e-3, 1e-4, 1e-5];
    let perturbations: Vec<_> = sizes.iter().map(|s| direction.scale(s / unit)).collect();
    let probe = stability_probe(&base, &NonlinearitySpec::monomial(3, 1.0)?, &cfg, &perturbations)?;
    let mut table = Table::new(["size", "ratio"]);
    for row in &probe.rows {
        table.push(vec![row.size, row.ratio]);
    }
    let mut part = Part::default();
    part.verdicts.push(Verdict::new(
        "C6",
        probe.ratio_change < 0.1,
        format!("ratio change {:.3e} between the two smallest sizes (limit 0.1)", probe.ratio_change),
    ));
    part.tables.push(("stability_ratio".into(), table));
    part.summary.insert("lambda".into(), json!(probe.lambda));
    Ok(part)
}

fn blowup_criterion() -> Result<Part, ExperimentError> {
    let cfg = SolverConfig {
        cutoff: 2,
        dt: 1e-5,
        blowup_threshold: 1e3,
        ..SolverConfig::default()
    };
    let input = SimInput::free(TrigField::constant(1, 2.0), 0.5)?;
    let traj = resolve(&input, &NonlinearitySpec::monomial(3, -1.0)?, &cfg)?;
    let mut part = Part::default();
    part.verdicts.push(blowup_verdict(traj.status, [0.10, 0.15]));
    part.summary.insert("status".into(), serde_json::to_value(traj.status).unwrap_or_default());
    Ok(part)
}

/// Target modes one growth step away from the cross `{0, ±e_i}`.
fn recipe_targets() -> Vec<(FrequencySet, Frequency)> {
    let line = FrequencySet::cross(1);
    let plane = FrequencySet::cross(2);
    let mut out = vec![(line.clone(), Frequency::from([2]))];
    for k in [[1, 1], [1, -1], [2, 0], [0, 2]] {
        out.push((plane.clone(), Frequency::from(k)));
    }
    out
}

fn recipe_criterion() -> Result<Part, ExperimentError> {
    let s = SolverConfig::default().s;
    let mut table = Table::new(["p", "epsilon", "leading", "residual", "bound"]);
    let mut failures = Vec::new();
    let mut count = 0;
    for p in [2u32, 3, 4] {
        for eps in [1e-1, 1e-2, 1e-3] {
            for (available, target) in recipe_targets() {
                for phase in [Phase::Cos, Phase::Sin] {
                    for leading in [1.0, -1.0] {
                        let recipe = decompose_mode(&target, phase, &available, p, leading, eps)?;
                        let residual = recipe.residual(s);
                        let bound = recipe.residual_bound(s);
                        let ok = residual <= bound && (p != 2 || residual == 0.0);
                        if !ok {
                            failures.push(format!("p={p} eps={eps} k={target} {phase:?} c={leading}: {residual:e} > {bound:e}"));
                        }
                        count += 1;
                        table.push(vec![p as f64, eps, leading, residual, bound]);
                    }
                }
            }
        }
    }
    let mut part = Part::default();
    part.verdicts.push(Verdict::new(
        "C8",
        failures.is_empty(),
        format!(
            "{count} recipes, {} over their bound{}",
            failures.len(),
            failures.first().map(|f| format!(", first {f}")).unwrap_or_default()
        ),
    ));
    part.tables.push(("recipes".into(), table));
    Ok(part)
}

/// Repeated runs must reproduce identical numbers.
fn determinism_check() -> Result<Part, ExperimentError> {
    let nl = NonlinearitySpec::monomial(3, 1.0)?;
    let a = limit_study_for(&nl, &nl)?;
    let b = limit_study_for(&nl, &nl)?;
    let first = steering_run()?;
    let second = steering_run()?;
    let mut part = Part::default();
    part.verdicts.push(Verdict::new(
        "D1",
        a.rows == b.rows && first.plan == second.plan && first.report == second.report,
        format!(
            "limit study rows identical: {}, plans identical: {}",
            a.rows == b.rows,
            first.plan == second.plan && first.report == second.report
        ),
    ));
    Ok(part)
}
