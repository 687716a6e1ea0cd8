use serde::{Deserialize, Serialize};

use super::steer::{steer_small_time, SegmentRecord, Steering};
use super::{hold, ControlPlan, HoldParams, PlanSegment, PlannerConfig, PlannerError};
use crate::saturation::{is_generator, lattice_span, saturate_with, FrequencySet, SaturationTrace};
use crate::solver::{endpoint, resolve, NonlinearitySpec, SimInput, Status, Trajectory};
use crate::spectral::TrigField;

/// How the fixed horizon is filled around the steering pieces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// `CoastThenSteer` when the uncontrolled run survives the horizon,
    /// `SteerThenHold` otherwise.
    #[default]
    Auto,
    /// Coast first, steer at the end, finish with a coast shorter than `tau`.
    CoastThenSteer,
    /// Steer first, then alternate coasts of length `tau` with re-steering.
    SteerThenHold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    /// The strategy actually used.
    pub strategy: Strategy,
    /// `||u(T) - u1||_s` of the executed plan.
    pub achieved_error: f64,
    /// `||u1 - P u1||_s` for the projection onto the reachable mode box.
    pub projection_error: f64,
    pub segment_errors: Vec<SegmentRecord>,
    /// Impulse lengths in plan order.
    pub deltas: Vec<f64>,
    pub hold: HoldParams,
    /// Coast-and-re-steer cycles.
    pub hold_iterations: usize,
    pub total_time: f64,
    pub lowering_added_time: f64,
    pub smoothing_time: f64,
    pub generator: bool,
    pub eta_only: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanOutcome {
    pub plan: ControlPlan,
    pub report: PlanReport,
    pub trajectory: Trajectory,
}

struct Context<'a> {
    nl: &'a NonlinearitySpec,
    cfg: &'a PlannerConfig,
    trace: SaturationTrace,
    target: TrigField,
    h: TrigField,
}

impl Context<'_> {
    fn run(&self, state: &TrigField, segs: &[PlanSegment]) -> Result<TrigField, PlannerError> {
        if segs.is_empty() {
            return Ok(state.clone());
        }
        let segments = segs.iter().map(|s| s.to_solver_segment(self.nl.degree(), &self.h)).collect();
        Ok(endpoint(&SimInput::new(state.clone(), segments)?, self.nl, &self.cfg.solver)?)
    }

    /// Steers the reachable part of `target - state` to within `budget` of
    /// `target`; modes that cannot be steered are charged to the budget.
    fn steer_to(&self, state: &TrigField, budget: f64) -> Result<Steering, PlannerError> {
        let s = self.cfg.solver.s;
        let full = &self.target - state;
        let disp = self.trace.last().project(&full.project_box(self.cfg.plan_cutoff));
        let leftover = (&full - &disp).sobolev_norm(s);
        if full.sobolev_norm(s) <= budget {
            return Ok(Steering {
                plan: ControlPlan::new(Vec::new(), self.target.clone(), budget),
                final_state: state.clone(),
                error: full.sobolev_norm(s),
                records: Vec::new(),
                lowering_added_time: 0.0,
            });
        }
        if leftover >= budget {
            return Err(PlannerError::PlanInfeasible(format!(
                "unsteerable modes of the state ({leftover:e}) exceed the budget {budget:e}"
            )));
        }
        steer_small_time(state, &(state + &disp), &self.trace, budget - leftover, self.nl, self.cfg)
    }
}

fn push_coast(segments: &mut Vec<PlanSegment>, duration: f64) {
    if duration <= 0.0 {
        return;
    }
    if let Some(PlanSegment::Coast(t)) = segments.last_mut() {
        *t += duration;
    } else {
        segments.push(PlanSegment::Coast(duration));
    }
}

/// Plans and executes controls steering `u0` to within `eps` of `u1` at time
/// `horizon`, with controls supported on `control_set`.
pub fn plan(
    u0: &TrigField,
    u1: &TrigField,
    eps: f64,
    horizon: f64,
    control_set: &FrequencySet,
    nl: &NonlinearitySpec,
    cfg: &PlannerConfig,
) -> Result<PlanOutcome, PlannerError> {
    cfg.validate()?;
    control_set.validate()?;
    if !(eps > 0.0 && eps.is_finite() && horizon > 0.0 && horizon.is_finite()) {
        return Err(PlannerError::Precondition("eps and the horizon must be positive".into()));
    }
    let dim = control_set.dim();
    if u0.dim() != dim || u1.dim() != dim {
        return Err(PlannerError::Precondition("states and control set have different dimensions".into()));
    }
    if nl.is_linear() {
        return Err(PlannerError::Precondition("planning needs a nonlinearity of degree >= 2".into()));
    }
    let generator = is_generator(control_set);
    if !generator {
        log::warn!("control set does not generate the lattice; only its span is reachable");
    }
    let p = nl.degree();
    let s = cfg.solver.s;
    let trace = saturate_with(control_set, p, cfg.plan_cutoff, cfg.max_levels, cfg.growth_for(p))?;
    let target = trace.last().project(&u1.project_box(cfg.plan_cutoff));
    let projection_error = (u1 - &target).sobolev_norm(s);
    if projection_error >= 0.5 * eps {
        let lattice = lattice_span(control_set);
        if let Some(k) = u1.support().find(|k| !lattice.contains(k)) {
            return Err(PlannerError::UnreachableTarget { k: k.clone() });
        }
        return Err(PlannerError::PlanInfeasible(format!(
            "projection error {projection_error:e} leaves no room within eps {eps}"
        )));
    }
    let ctx = Context {
        nl,
        cfg,
        trace,
        target,
        h: cfg.forcing(dim),
    };

    let mut segments = Vec::new();
    let mut start = u0.clone();
    if !u0.fits_box(cfg.solver.cutoff) {
        start = u0.project_box(cfg.solver.cutoff);
        push_coast(&mut segments, 10.0 * cfg.solver.dt);
    }
    let smoothing_time: f64 = segments.iter().map(PlanSegment::duration).fold(0.0, |a, b| a + b);
    let available = horizon - smoothing_time;
    if available <= 0.0 {
        return Err(infeasible("horizon shorter than the smoothing coast"));
    }
    let state0 = ctx.run(&start, &segments)?;
    let tube = 0.9 * eps - projection_error;
    let hold_params = hold(&ctx.target, tube, available, nl, cfg)?;
    let strategy = match cfg.strategy {
        Strategy::Auto => {
            let free = SimInput::new(
                state0.clone(),
                vec![PlanSegment::Coast(available).to_solver_segment(p, &ctx.h)],
            )?;
            if endpoint(&free, nl, &cfg.solver).is_ok() {
                Strategy::CoastThenSteer
            } else {
                Strategy::SteerThenHold
            }
        }
        other => other,
    };

    let mut steerings = Vec::new();
    let mut hold_iterations = 0;
    match strategy {
        Strategy::CoastThenSteer | Strategy::Auto => {
            let mut guess = (0.5 * hold_params.tau).min(0.5 * available);
            let mut done = false;
            for _ in 0..6 {
                let coast = available - guess;
                let state = ctx.run(&state0, &[PlanSegment::Coast(coast)])?;
                let steering = ctx.steer_to(&state, hold_params.r)?;
                let used = steering.plan.total_time;
                let pad = guess - used;
                if pad >= 0.0 && pad < hold_params.tau {
                    push_coast(&mut segments, coast);
                    segments.extend(steering.plan.segments.iter().cloned());
                    push_coast(&mut segments, pad);
                    steerings.push(steering);
                    done = true;
                    break;
                }
                guess = used + 0.25 * hold_params.tau.min(available);
                if guess >= available {
                    break;
                }
            }
            if !done {
                return Err(infeasible("steering does not fit before the horizon"));
            }
        }
        Strategy::SteerThenHold => {
            let first = ctx.steer_to(&state0, (0.5 * eps).min(hold_params.r))?;
            let mut remaining = available - first.plan.total_time;
            let mut state = first.final_state.clone();
            segments.extend(first.plan.segments.iter().cloned());
            steerings.push(first);
            if remaining < 0.0 {
                return Err(infeasible("initial steering exceeds the horizon"));
            }
            let max_iterations = (horizon / hold_params.tau).floor() as usize + 1;
            while remaining >= hold_params.tau {
                hold_iterations += 1;
                if hold_iterations > max_iterations {
                    return Err(infeasible("hold loop exceeded its iteration bound"));
                }
                push_coast(&mut segments, hold_params.tau);
                state = ctx.run(&state, &[PlanSegment::Coast(hold_params.tau)])?;
                let st = ctx.steer_to(&state, hold_params.r)?;
                remaining -= hold_params.tau + st.plan.total_time;
                if remaining < 0.0 {
                    return Err(infeasible("re-steering does not fit in the horizon"));
                }
                segments.extend(st.plan.segments.iter().cloned());
                state = st.final_state.clone();
                steerings.push(st);
            }
            push_coast(&mut segments, remaining);
        }
    }

    let plan = ControlPlan::new(segments, u1.clone(), eps);
    let trajectory = resolve(&plan.to_sim_input(&start, p, &ctx.h)?, nl, &cfg.solver)?;
    if let Status::BlownUpAt(t) = trajectory.status {
        return Err(PlannerError::Solver(crate::solver::SolverError::BlownUpAt {
            t,
            norm: *trajectory.norms.last().unwrap_or(&f64::INFINITY),
        }));
    }
    let achieved_error = (trajectory.final_state() - u1).sobolev_norm(s);
    let report = PlanReport {
        strategy,
        achieved_error,
        projection_error,
        segment_errors: steerings.iter().flat_map(|st| st.records.iter().cloned()).collect(),
        deltas: plan.impulses().map(|seg| seg.delta).collect(),
        hold: hold_params,
        hold_iterations,
        total_time: plan.total_time,
        lowering_added_time: steerings.iter().map(|st| st.lowering_added_time).sum(),
        smoothing_time,
        generator,
        eta_only: plan.is_eta_only(),
    };
    Ok(PlanOutcome {
        plan,
        report,
        trajectory,
    })
}

fn infeasible(msg: &str) -> PlannerError {
    PlannerError::PlanInfeasible(msg.to_string())
}
