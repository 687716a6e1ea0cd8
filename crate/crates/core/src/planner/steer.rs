use serde::{Deserialize, Serialize};

use super::impulse::{check_impulse, ideal_jump};
use super::search::search_delta;
use super::{ControlPlan, ImpulseKind, ImpulseSegment, PlanSegment, PlannerConfig, PlannerError};
use crate::saturation::{
    decompose_mode, decompose_product, decompose_within, DecompositionRecipe, FrequencySet, GrowthMode, SaturationError,
    SaturationTrace,
};
use crate::solver::{endpoint, NonlinearitySpec, SimInput};
use crate::spectral::{Frequency, Phase, SobolevIndex, TrigField};

const MAX_DEPTH: usize = 12;

/// Sum of absolute coefficients, a bound on the sup norm.
fn l1_norm(f: &TrigField) -> f64 {
    f.iter().map(|(_, m)| m.cos.abs() + m.sin.abs()).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    TwoControl,
    EtaOnly,
    /// Jump `-c zeta^p` for `zeta` outside the control span: shift, coast, shift back.
    Composite,
    /// Replacement of a two-control impulse by eta-only impulses.
    Lowering,
}

/// Outcome of one emitted piece. `error` is measured against the exact jump
/// from the state the piece actually started in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub kind: RecordKind,
    /// Saturation level of the displacement that produced the piece.
    pub level: usize,
    pub delta: f64,
    pub budget: f64,
    pub error: f64,
    pub probes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Steering {
    pub plan: ControlPlan,
    pub final_state: TrigField,
    /// `||final_state - target||_s`.
    pub error: f64,
    pub records: Vec<SegmentRecord>,
    /// Time added by lowering two-control impulses.
    pub lowering_added_time: f64,
}

/// Executes pieces of a plan one at a time.
struct Runner<'a> {
    nl: &'a NonlinearitySpec,
    cfg: &'a PlannerConfig,
    h: TrigField,
    s: SobolevIndex,
    records: Vec<SegmentRecord>,
    added_time: f64,
}

impl<'a> Runner<'a> {
    fn new(nl: &'a NonlinearitySpec, cfg: &'a PlannerConfig, dim: usize) -> Result<Self, PlannerError> {
        cfg.validate()?;
        if nl.is_linear() {
            return Err(PlannerError::Precondition("steering needs a nonlinearity of degree >= 2".into()));
        }
        Ok(Runner {
            nl,
            cfg,
            h: cfg.forcing(dim),
            s: cfg.solver.s,
            records: Vec::new(),
            added_time: 0.0,
        })
    }

    fn p(&self) -> u32 {
        self.nl.degree()
    }

    fn run(&self, state: &TrigField, segs: &[PlanSegment]) -> Result<TrigField, PlannerError> {
        let segments = segs.iter().map(|s| s.to_solver_segment(self.p(), &self.h)).collect();
        let input = SimInput::new(state.clone(), segments)?;
        Ok(endpoint(&input, self.nl, &self.cfg.solver)?)
    }

    fn dist(&self, a: &TrigField, b: &TrigField) -> f64 {
        (a - b).sobolev_norm(self.s)
    }

    /// First impulse length tried: the configured value, shortened so that
    /// `delta |c| A^(p-1) <= 0.1` for the amplitude bound `A` of the fields
    /// involved, below which the nonlinear time scale is resolved.
    fn start_delta(&self, fields: &[&TrigField]) -> f64 {
        let amplitude: f64 = fields.iter().map(|f| l1_norm(f)).sum();
        let rate = self.nl.leading().abs() * amplitude.powi(self.p() as i32 - 1);
        if rate > 0.0 {
            self.cfg.initial_delta.min(0.1 / rate)
        } else {
            self.cfg.initial_delta
        }
    }

    /// Emits an impulse realizing `state -> state + eta - c zeta^p` within `budget`.
    fn impulse_to(
        &mut self,
        state: &TrigField,
        zeta: TrigField,
        eta: TrigField,
        budget: f64,
        level: usize,
        out: &mut Vec<PlanSegment>,
    ) -> Result<TrigField, PlannerError> {
        let two = !zeta.is_zero();
        let template = if two {
            ImpulseSegment::two_control(1.0, zeta, eta)
        } else {
            ImpulseSegment::eta_only(1.0, eta)
        };
        check_impulse(&template, self.nl, &self.cfg.solver)?;
        let ideal = ideal_jump(state, &template, self.nl);
        let lowering = two && self.cfg.lower;
        let own_budget = if lowering { 0.9 * budget } else { budget };
        let what = if two { "two-control impulse" } else { "eta-only impulse" };
        let start = self.start_delta(&[state, &template.eta, &template.zeta]);
        let found = search_delta(what, start, own_budget, self.cfg.max_probes, |d| {
            let end = self.run(state, &[PlanSegment::Impulse(template.with_delta(d))])?;
            Ok((self.dist(&end, &ideal), end))
        })?;
        let seg = template.with_delta(found.delta);
        self.records.push(SegmentRecord {
            kind: if two { RecordKind::TwoControl } else { RecordKind::EtaOnly },
            level,
            delta: found.delta,
            budget: own_budget,
            error: found.error,
            probes: found.history.len(),
        });
        if !lowering {
            out.push(PlanSegment::Impulse(seg));
            return Ok(found.value);
        }
        let (segs, end) = self.lower_segment(state, &seg, &found.value, 0.1 * budget, level)?;
        out.extend(segs);
        Ok(end)
    }

    /// Eta-only impulses adding and removing `delta^(-1/p) zeta` around the
    /// window of `seg`, with inner length chosen so the endpoint moves by at
    /// most `budget` relative to `original_end`.
    fn lower_segment(
        &mut self,
        state: &TrigField,
        seg: &ImpulseSegment,
        original_end: &TrigField,
        budget: f64,
        level: usize,
    ) -> Result<(Vec<PlanSegment>, TrigField), PlannerError> {
        let shift = seg.zeta.scale(seg.delta.powf(-1.0 / self.p() as f64));
        let middle = if seg.eta.is_zero() {
            PlanSegment::Coast(seg.delta)
        } else {
            PlanSegment::Impulse(ImpulseSegment::eta_only(seg.delta, seg.eta.clone()))
        };
        let build = |d: f64| {
            vec![
                PlanSegment::Impulse(ImpulseSegment::eta_only(d, shift.clone())),
                middle.clone(),
                PlanSegment::Impulse(ImpulseSegment::eta_only(d, -&shift)),
            ]
        };
        let found = search_delta("lowering", 0.1 * seg.delta, budget, self.cfg.max_probes, |d| {
            let segs = build(d);
            let end = self.run(state, &segs)?;
            Ok((self.dist(&end, original_end), (segs, end)))
        })?;
        self.added_time += 2.0 * found.delta;
        self.records.push(SegmentRecord {
            kind: RecordKind::Lowering,
            level,
            delta: found.delta,
            budget,
            error: found.error,
            probes: found.history.len(),
        });
        Ok(found.value)
    }
}

/// Recursive steering over the levels of a saturation trace.
struct Steerer<'a> {
    run: Runner<'a>,
    trace: &'a SaturationTrace,
}

impl<'a> Steerer<'a> {
    fn steer(
        &mut self,
        state: &TrigField,
        disp: &TrigField,
        budget: f64,
        depth: usize,
        out: &mut Vec<PlanSegment>,
    ) -> Result<TrigField, PlannerError> {
        if disp.is_zero() {
            return Ok(state.clone());
        }
        if depth > MAX_DEPTH {
            return Err(PlannerError::Precondition("steering recursion too deep".into()));
        }
        let mut level = 0;
        for k in disp.support() {
            match self.trace.level_of(k) {
                Some(l) => level = level.max(l),
                None => return Err(PlannerError::UnreachableTarget { k: k.clone() }),
            }
        }
        let zero = TrigField::zero(disp.dim());
        if level == 0 {
            return self.run.impulse_to(state, zero, disp.clone(), budget, 0, out);
        }
        let (eta, zetas) = self.decompose(disp, level, budget / 10.0)?;
        let pieces = zetas.len() + usize::from(!eta.is_zero());
        let share = 0.9 * budget / (self.run.cfg.safety * pieces as f64);
        let mut cur = state.clone();
        for z in zetas {
            cur = if self.trace.levels[0].supports(&z) {
                self.run.impulse_to(&cur, z, zero.clone(), share, level, out)?
            } else {
                self.composite(&cur, &z, share, level, depth, out)?
            };
        }
        if !eta.is_zero() {
            cur = self.steer(&cur, &eta, share, depth + 1, out)?;
        }
        Ok(cur)
    }

    /// Realizes `-c zeta^p` for `zeta` in a higher level: shift by
    /// `delta^(-1/p) zeta`, coast `delta`, shift back. The shifts are
    /// displacements of a lower level.
    fn composite(
        &mut self,
        state: &TrigField,
        zeta: &TrigField,
        budget: f64,
        level: usize,
        depth: usize,
        out: &mut Vec<PlanSegment>,
    ) -> Result<TrigField, PlannerError> {
        let template = ImpulseSegment::two_control(1.0, zeta.clone(), TrigField::zero(zeta.dim()));
        check_impulse(&template, self.run.nl, &self.run.cfg.solver)?;
        let ideal = ideal_jump(state, &template, self.run.nl);
        let inv_p = -1.0 / self.run.p() as f64;
        let run = &self.run;
        let found = search_delta("composite coast", run.cfg.initial_delta, budget / 3.0, run.cfg.max_probes, |d| {
            let shift = zeta.scale(d.powf(inv_p));
            let end = run.run(&(state + &shift), &[PlanSegment::Coast(d)])?;
            Ok((run.dist(&(&end - &shift), &ideal), ()))
        })?;
        let shift = zeta.scale(found.delta.powf(inv_p));
        let shifted = self.steer(state, &shift, budget / 3.0, depth + 1, out)?;
        out.push(PlanSegment::Coast(found.delta));
        let coasted = self.run.run(&shifted, &[PlanSegment::Coast(found.delta)])?;
        let end = self.steer(&coasted, &-&shift, budget / 3.0, depth + 1, out)?;
        let error = self.run.dist(&end, &ideal);
        self.run.records.push(SegmentRecord {
            kind: RecordKind::Composite,
            level,
            delta: found.delta,
            budget,
            error,
            probes: found.history.len(),
        });
        Ok(end)
    }

    /// Splits `disp` (top level `level`) as `eta - c sum zeta_m^p` with
    /// `eta` and every `zeta_m` in the level below. Recipes with a nonzero
    /// `eta` may leave modes of the current level in it; those are split again.
    fn decompose(
        &self,
        disp: &TrigField,
        level: usize,
        recipe_budget: f64,
    ) -> Result<(TrigField, Vec<TrigField>), PlannerError> {
        let lower = &self.trace.levels[level - 1];
        let c = self.run.nl.leading();
        let inv_p = 1.0 / self.run.p() as f64;
        let mut eta = TrigField::zero(disp.dim());
        let mut rest = disp.clone();
        let mut zetas = Vec::new();
        for _ in 0..4 {
            let inside = lower.project(&rest);
            let outside = &rest - &inside;
            eta = &eta + &inside;
            if outside.is_zero() {
                return Ok((eta, zetas));
            }
            let terms: Vec<(Frequency, Phase, f64)> = outside
                .iter()
                .flat_map(|(k, m)| [(k.clone(), Phase::Cos, m.cos), (k.clone(), Phase::Sin, m.sin)])
                .filter(|t| t.2 != 0.0)
                .collect();
            let per_term = recipe_budget / terms.len() as f64;
            rest = TrigField::zero(disp.dim());
            for (k, phase, a) in terms {
                // With leading sign(a) c every weight w gives -a w / c > 0.
                let recipe = self.recipe(&k, phase, lower, a.signum() * c, per_term / a.abs())?;
                rest = &rest + &recipe.eta.scale(a);
                for st in &recipe.steps {
                    let lambda = (-a * st.weight / c).powf(inv_p);
                    zetas.push(st.zeta.scale(lambda));
                }
            }
        }
        Err(PlannerError::Precondition("decomposition did not close after four rounds".into()))
    }

    fn recipe(
        &self,
        k: &Frequency,
        phase: Phase,
        lower: &FrequencySet,
        leading: f64,
        residual: f64,
    ) -> Result<DecompositionRecipe, PlannerError> {
        let p = self.run.p();
        let r = if p % 2 == 1 && self.trace.mode == GrowthMode::FullP {
            decompose_product(k, phase, lower, p, leading)
        } else if p % 2 == 1 || p == 2 {
            decompose_mode(k, phase, lower, p, leading, 0.1)
        } else {
            decompose_within(k, phase, lower, p, leading, self.run.s, 10.0 * residual)
        };
        r.map_err(|e| match e {
            SaturationError::Unreachable { target } => PlannerError::UnreachableTarget { k: target },
            e => e.into(),
        })
    }
}

/// Plan moving `u0` to within `eps` of `target`, executed piece by piece as it
/// is built. Every impulse length is found by shrinking until the measured
/// error of that piece fits its share of the budget.
pub fn steer_small_time(
    u0: &TrigField,
    target: &TrigField,
    trace: &SaturationTrace,
    eps: f64,
    nl: &NonlinearitySpec,
    cfg: &PlannerConfig,
) -> Result<Steering, PlannerError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(PlannerError::Precondition(format!("epsilon must be positive, got {eps}")));
    }
    if u0.dim() != target.dim() || trace.last().dim() != u0.dim() {
        return Err(PlannerError::Precondition("dimension mismatch between states and control set".into()));
    }
    if trace.degree != nl.degree() {
        return Err(PlannerError::Precondition(format!(
            "trace built for degree {} but the nonlinearity has degree {}",
            trace.degree,
            nl.degree()
        )));
    }
    let mut steerer = Steerer {
        run: Runner::new(nl, cfg, u0.dim())?,
        trace,
    };
    let mut out = Vec::new();
    let end = steerer.steer(u0, &(target - u0), eps, 0, &mut out)?;
    let error = steerer.run.dist(&end, target);
    Ok(Steering {
        plan: ControlPlan::new(out, target.clone(), eps),
        final_state: end,
        error,
        records: steerer.run.records,
        lowering_added_time: steerer.run.added_time,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoweredPlan {
    pub plan: ControlPlan,
    /// Sum of the inner impulse lengths.
    pub added_time: f64,
    pub records: Vec<SegmentRecord>,
    pub final_state: TrigField,
}

/// Replaces every two-control impulse by eta-only impulses, executing from
/// `u0`. A segment's budget is its own measured distance to the exact jump;
/// lowering moves its endpoint by at most a tenth of that.
pub fn lower_plan(
    u0: &TrigField,
    plan: &ControlPlan,
    nl: &NonlinearitySpec,
    cfg: &PlannerConfig,
) -> Result<LoweredPlan, PlannerError> {
    let mut run = Runner::new(nl, cfg, u0.dim())?;
    let mut state = u0.clone();
    let mut segments = Vec::with_capacity(plan.segments.len());
    for seg in &plan.segments {
        match seg {
            PlanSegment::Impulse(imp) if imp.kind == ImpulseKind::TwoControl && !imp.zeta.is_zero() => {
                check_impulse(imp, nl, &cfg.solver)?;
                let original = run.run(&state, std::slice::from_ref(seg))?;
                let budget = run.dist(&original, &ideal_jump(&state, imp, nl)).max(1e-12);
                let (lowered, end) = run.lower_segment(&state, imp, &original, 0.1 * budget, 0)?;
                segments.extend(lowered);
                state = end;
            }
            other => {
                state = run.run(&state, std::slice::from_ref(other))?;
                segments.push(other.clone());
            }
        }
    }
    Ok(LoweredPlan {
        plan: ControlPlan::new(segments, plan.target.clone(), plan.epsilon),
        added_time: run.added_time,
        records: run.records,
        final_state: state,
    })
}
