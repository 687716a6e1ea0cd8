use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::planner::PlannerConfig;
use crate::saturation::{FrequencySet, GrowthMode};
use crate::solver::{NonlinearitySpec, Perturbation, Segment, SimInput, SolverConfig};
use crate::spectral::TrigField;

/// One experiment read from JSON. The `kind` key selects the experiment and
/// its parameters sit next to the shared fields at the top level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearitySpec>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_set: Option<FrequencySet>,
    /// Initial state; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<TrigField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u1: Option<TrigField>,
    /// Background forcing applied to every window; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<TrigField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Simulate(SimulateParams),
    LimitStudy(LimitStudyParams),
    Saturate(SaturateParams),
    Plan(PlanParams),
    Stability(StabilityParams),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Simulate(_) => "simulate",
            Experiment::LimitStudy(_) => "limit_study",
            Experiment::Saturate(_) => "saturate",
            Experiment::Plan(_) => "plan",
            Experiment::Stability(_) => "stability",
        }
    }

    fn keys(&self) -> &'static [&'static str] {
        match self {
            Experiment::Simulate(_) => &["segments", "report_cutoff", "expect_blowup_in", "expect_lattice_invariance"],
            Experiment::LimitStudy(_) => &["zeta", "eta", "deltas", "min_slope"],
            Experiment::Saturate(_) => &["degree", "cutoff", "max_levels", "growth"],
            Experiment::Plan(_) => &["planner"],
            Experiment::Stability(_) => &["segments", "direction", "sizes", "max_ratio_change"],
        }
    }
}

/// A control window; absent controls are zero and an absent `h` falls back
/// to the scenario's `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<TrigField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<TrigField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<TrigField>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateParams {
    /// Windows in order; when empty the run is uncontrolled over `horizon`.
    #[serde(default)]
    pub segments: Vec<SegmentSpec>,
    /// Modes written to the trajectory table; defaults to the solver cutoff.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_cutoff: Option<i64>,
    /// Expect the run to blow up at a time inside `[lo, hi]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_blowup_in: Option<[f64; 2]>,
    /// Expect every mode outside the lattice spanned by `control_set` to stay
    /// below this magnitude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_lattice_invariance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitStudyParams {
    pub zeta: TrigField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<TrigField>,
    pub deltas: Vec<f64>,
    /// Floor on the fitted log-log slope; `1/p - 0.15` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturateParams {
    /// Defaults to the degree of the nonlinearity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    pub cutoff: i64,
    #[serde(default = "default_max_levels")]
    pub max_levels: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthMode>,
}

fn default_max_levels() -> usize {
    64
}

/// Planner settings; the scenario's `solver` and `h` replace the ones here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanParams {
    #[serde(default)]
    pub planner: PlannerConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityParams {
    #[serde(default)]
    pub segments: Vec<SegmentSpec>,
    /// Perturbation direction, rescaled to each requested size.
    pub direction: Perturbation,
    pub sizes: Vec<f64>,
    #[serde(default = "default_ratio_change")]
    pub max_ratio_change: f64,
}

fn default_ratio_change() -> f64 {
    0.1
}

const SHARED_KEYS: &[&str] = &[
    "name",
    "kind",
    "dim",
    "nonlinearity",
    "solver",
    "control_set",
    "u0",
    "u1",
    "h",
    "horizon",
    "epsilon",
];

impl Scenario {
    /// Parses and validates; `origin` labels diagnostics, which carry the
    /// line and column of the offending key.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ExperimentError> {
        let parse_error = |e: serde_json::Error| ExperimentError::Parse {
            origin: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: strip_position(&e.to_string()),
        };
        let scenario: Scenario = serde_json::from_str(text).map_err(parse_error)?;
        let invalid = |key: &str, message: &str| {
            let at = key_position(text, key).map(|(l, c)| format!("{l}:{c}:")).unwrap_or_default();
            ExperimentError::Invalid(format!("{origin}:{at} `{key}`: {message}"))
        };
        // Flattened structs cannot reject unknown keys themselves.
        let raw: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text).map_err(parse_error)?;
        let kind_keys = scenario.experiment.keys();
        if let Some(key) = raw
            .keys()
            .find(|k| !SHARED_KEYS.contains(&k.as_str()) && !kind_keys.contains(&k.as_str()))
        {
            return Err(invalid(key, &format!("unknown key for kind `{}`", scenario.experiment.kind())));
        }
        scenario.validate().map_err(|p| invalid(p.key, &p.message))?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<(), Problem> {
        let d = self.dim;
        if self.name.trim().is_empty() {
            return Err(Problem::new("name", "must not be empty"));
        }
        if d == 0 {
            return Err(Problem::new("dim", "must be at least 1"));
        }
        self.solver.validate().map_err(|e| Problem::new("solver", e))?;
        let check_field = |key: &'static str, what: &str, f: &TrigField| {
            if f.dim() == d {
                Ok(())
            } else {
                Err(Problem::new(key, format!("{what} has dimension {}, expected {d}", f.dim())))
            }
        };
        for (key, f) in [("u0", &self.u0), ("u1", &self.u1), ("h", &self.h)] {
            if let Some(f) = f {
                check_field(key, key, f)?;
            }
        }
        if let Some(set) = &self.control_set {
            if set.dim() != d {
                return Err(Problem::new("control_set", format!("has dimension {}, expected {d}", set.dim())));
            }
            set.validate().map_err(|e| Problem::new("control_set", e))?;
        }
        if let Some(t) = self.horizon {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Problem::new("horizon", format!("must be positive, got {t}")));
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Problem::new("epsilon", format!("must be positive, got {eps}")));
            }
        }
        let needs_nl = || match self.nonlinearity {
            Some(_) => Ok(()),
            None => Err(Problem::new("nonlinearity", format!("required for kind `{}`", self.experiment.kind()))),
        };
        let require = |key: &'static str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(Problem::new(key, format!("required for kind `{}`", self.experiment.kind())))
            }
        };
        let check_segments = |segments: &[SegmentSpec]| -> Result<(), Problem> {
            if segments.is_empty() && self.horizon.is_none() {
                return Err(Problem::new("segments", "give segments or a horizon for an uncontrolled run"));
            }
            for (i, seg) in segments.iter().enumerate() {
                if !(seg.duration > 0.0 && seg.duration.is_finite()) {
                    return Err(Problem::new("segments", format!("segment {i}: duration must be positive")));
                }
                for (what, f) in [("zeta", &seg.zeta), ("eta", &seg.eta), ("h", &seg.h)] {
                    let Some(f) = f else { continue };
                    let what = format!("segment {i} {what}");
                    check_field("segments", &what, f)?;
                    if !what.ends_with(" h") {
                        if let Some(set) = &self.control_set {
                            if !set.supports(f) {
                                return Err(Problem::new("segments", format!("{what} is not supported on the control set")));
                            }
                        }
                    }
                }
            }
            Ok(())
        };
        match &self.experiment {
            Experiment::Simulate(p) => {
                needs_nl()?;
                check_segments(&p.segments)?;
                if let Some([lo, hi]) = p.expect_blowup_in {
                    if !(lo <= hi) {
                        return Err(Problem::new("expect_blowup_in", "must be an interval [lo, hi]"));
                    }
                }
                if p.expect_lattice_invariance.is_some() {
                    require("control_set", self.control_set.is_some())?;
                }
            }
            Experiment::LimitStudy(p) => {
                needs_nl()?;
                check_field("zeta", "zeta", &p.zeta)?;
                if let Some(eta) = &p.eta {
                    check_field("eta", "eta", eta)?;
                }
                let decreasing = p.deltas.windows(2).all(|w| w[1] < w[0]);
                if p.deltas.is_empty() || !decreasing || !(p.deltas[p.deltas.len() - 1] > 0.0) {
                    return Err(Problem::new("deltas", "must be positive and strictly decreasing"));
                }
            }
            Experiment::Saturate(p) => {
                require("control_set", self.control_set.is_some())?;
                if p.degree.is_none() {
                    needs_nl()?;
                }
                if p.cutoff < 0 {
                    return Err(Problem::new("cutoff", "must be non-negative"));
                }
            }
            Experiment::Plan(p) => {
                needs_nl()?;
                require("control_set", self.control_set.is_some())?;
                require("u1", self.u1.is_some())?;
                require("horizon", self.horizon.is_some())?;
                require("epsilon", self.epsilon.is_some())?;
                self.planner_config(p).validate().map_err(|e| Problem::new("planner", e))?;
            }
            Experiment::Stability(p) => {
                needs_nl()?;
                check_segments(&p.segments)?;
                for (what, f) in [
                    ("du0", &p.direction.du0),
                    ("dzeta", &p.direction.dzeta),
                    ("dphi", &p.direction.dphi),
                ] {
                    check_field("direction", what, f)?;
                }
                if p.sizes.is_empty() || p.sizes.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(Problem::new("sizes", "must be a non-empty list of positive numbers"));
                }
            }
        }
        Ok(())
    }

    pub fn initial(&self) -> TrigField {
        self.u0.clone().unwrap_or_else(|| TrigField::zero(self.dim))
    }

    pub fn forcing(&self) -> TrigField {
        self.h.clone().unwrap_or_else(|| TrigField::zero(self.dim))
    }

    pub fn nonlinearity(&self) -> Result<&NonlinearitySpec, ExperimentError> {
        self.nonlinearity
            .as_ref()
            .ok_or_else(|| ExperimentError::Invalid("scenario has no nonlinearity".into()))
    }

    /// Solver input for `segments`, or a free run over `horizon` when empty.
    pub fn sim_input(&self, segments: &[SegmentSpec]) -> Result<SimInput, ExperimentError> {
        let u0 = self.initial();
        if segments.is_empty() {
            let horizon = self
                .horizon
                .ok_or_else(|| ExperimentError::Invalid("uncontrolled run needs a horizon".into()))?;
            return Ok(SimInput::new(u0, vec![Segment::coast(self.dim, horizon).with_h(self.forcing())])?);
        }
        let zero = || TrigField::zero(self.dim);
        let segments = segments
            .iter()
            .map(|s| {
                Segment::coast(self.dim, s.duration)
                    .with_zeta(s.zeta.clone().unwrap_or_else(zero))
                    .with_eta(s.eta.clone().unwrap_or_else(zero))
                    .with_h(s.h.clone().unwrap_or_else(|| self.forcing()))
            })
            .collect();
        Ok(SimInput::new(u0, segments)?)
    }

    pub fn planner_config(&self, params: &PlanParams) -> PlannerConfig {
        PlannerConfig {
            solver: self.solver.clone(),
            h: self.h.clone(),
            ..params.planner.clone()
        }
    }
}

/// A validation failure tied to the top-level key it concerns.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub key: &'static str,
    pub message: String,
}

impl Problem {
    fn new(key: &'static str, message: impl ToString) -> Self {
        Problem {
            key,
            message: message.to_string(),
        }
    }
}

impl std::fmt::Display for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "`{}`: {}", self.key, self.message)
    }
}

/// Line and column (1-based) of the first occurrence of `"key"` followed by a colon.
fn key_position(text: &str, key: &str) -> Option<(usize, usize)> {
    let quoted = format!("\"{key}\"");
    for (i, line) in text.lines().enumerate() {
        let mut from = 0;
        while let Some(j) = line[from..].find(&quoted) {
            let at = from + j;
            if line[at + quoted.len()..].trim_start().starts_with(':') {
                return Some((i + 1, at + 1));
            }
            from = at + quoted.len();
        }
    }
    None
}

/// serde_json appends " at line L column C"; the position is reported separately.
fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}
