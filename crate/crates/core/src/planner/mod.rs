//! Open-loop steering built from impulse segments.
//!
//! An impulse of length `delta` with controls `delta^(-1/p) zeta` and
//! `h + delta^(-1) eta` moves the state by approximately `eta - c zeta^p`.
//! Displacements outside the control span are split with decomposition
//! recipes into such jumps, recursively over the saturation levels, and a
//! fixed horizon is filled with uncontrolled coasts.

mod hold;
mod impulse;
mod plan;
mod search;
mod segments;
mod steer;

pub use hold::{hold, HoldParams};
pub use impulse::{ideal_jump, impulse, limit_study, limit_study_against, LimitRow, LimitStudy};
pub use plan::{plan, PlanOutcome, PlanReport, Strategy};
pub use segments::{ControlPlan, ImpulseKind, ImpulseSegment, PlanJson, PlanSegment, SegmentJson};
pub use steer::{lower_plan, steer_small_time, LoweredPlan, RecordKind, SegmentRecord, Steering};

use serde::{Deserialize, Serialize};

use crate::saturation::{GrowthMode, SaturationError};
use crate::solver::{SolverConfig, SolverError};
use crate::spectral::{Frequency, SpectralError, TrigField};

#[derive(Debug, thiserror::Error)]
pub enum PlannerError {
    #[error("impulse length must be positive and finite, got {0}")]
    InvalidDelta(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{what}: error {error:e} did not reach budget {budget:e}")]
    NoConvergence { what: String, error: f64, budget: f64 },
    #[error("mode {k} cannot be reached from the control set")]
    UnreachableTarget { k: Frequency },
    #[error("no hold radius above 1e-8 (best {r:e})")]
    HoldFailure { r: f64 },
    #[error("plan does not fit the horizon: {0}")]
    PlanInfeasible(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Saturation(#[from] SaturationError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

impl PlannerError {
    pub fn is_blowup(&self) -> bool {
        matches!(self, PlannerError::Solver(SolverError::BlownUpAt { .. }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub solver: SolverConfig,
    /// Background forcing `h`, constant in time; zero when absent.
    pub h: Option<TrigField>,
    /// Targets are projected to `|k|_inf <= plan_cutoff`.
    pub plan_cutoff: i64,
    pub max_levels: usize,
    /// Growth used for the level structure; full `p`-fold sums for odd `p`
    /// and pairwise sums otherwise when absent.
    pub growth: Option<GrowthMode>,
    /// Divides every equal budget share.
    pub safety: f64,
    pub initial_delta: f64,
    pub max_probes: usize,
    pub strategy: Strategy,
    /// Replace every two-control impulse by eta-only impulses as it is emitted.
    pub lower: bool,
    /// Probe directions for [`hold`] are the modes with `|k|_inf <= hold_cutoff`.
    pub hold_cutoff: i64,
    pub hold_bisections: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            solver: SolverConfig {
                blowup_threshold: 1e12,
                ..SolverConfig::default()
            },
            h: None,
            plan_cutoff: 4,
            max_levels: 8,
            growth: None,
            safety: 2.0,
            initial_delta: 0.1,
            max_probes: 30,
            strategy: Strategy::Auto,
            lower: true,
            hold_cutoff: 1,
            hold_bisections: 16,
        }
    }
}

impl PlannerConfig {
    pub fn forcing(&self, dim: usize) -> TrigField {
        self.h.clone().unwrap_or_else(|| TrigField::zero(dim))
    }

    pub fn growth_for(&self, p: u32) -> GrowthMode {
        self.growth.unwrap_or(if p % 2 == 1 { GrowthMode::FullP } else { GrowthMode::Pairwise })
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        self.solver.validate()?;
        let bad = |what: &str| Err(PlannerError::Precondition(format!("planner config: {what}")));
        if self.plan_cutoff < 0 {
            return bad("plan_cutoff must be non-negative");
        }
        if !(self.safety >= 1.0) {
            return bad("safety must be at least 1");
        }
        if !(self.initial_delta > 0.0 && self.initial_delta.is_finite()) {
            return bad("initial_delta must be positive");
        }
        if self.max_probes == 0 {
            return bad("max_probes must be positive");
        }
        Ok(())
    }
}
