use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PlannerConfig, PlannerError};
use crate::solver::{resolve, NonlinearitySpec, Segment, SimInput, SolverConfig};
use crate::spectral::{box_frequencies, Phase, TrigField};

/// Empirical tube certificate: uncontrolled runs from the probed points of the
/// `r`-sphere around `u1` stay `eps`-close to `u1` for time `tau`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldParams {
    pub r: f64,
    pub tau: f64,
    /// Exit time of the run started at `u1` itself, capped at the horizon.
    pub tau0: f64,
    pub directions: usize,
}

/// Finds `r` in `(0, eps)` and `tau > 0` by bisection on `r`, requiring every
/// probed run to stay in the tube for `tau = tau0 / 2` (the full horizon if
/// the run from `u1` never leaves).
pub fn hold(
    u1: &TrigField,
    eps: f64,
    horizon: f64,
    nl: &NonlinearitySpec,
    cfg: &PlannerConfig,
) -> Result<HoldParams, PlannerError> {
    cfg.validate()?;
    if !(eps > 0.0 && horizon > 0.0) {
        return Err(PlannerError::Precondition("hold needs eps > 0 and a positive horizon".into()));
    }
    let u1 = u1.project_box(cfg.solver.cutoff);
    let solver = SolverConfig {
        record_stride: 1,
        ..cfg.solver.clone()
    };
    let h = cfg.forcing(u1.dim());
    let exit_time = |start: TrigField| -> Result<f64, PlannerError> {
        let input = SimInput::new(start, vec![Segment::coast(u1.dim(), horizon).with_h(h.clone())])?;
        let traj = resolve(&input, nl, &solver)?;
        let exit = traj
            .times
            .iter()
            .zip(&traj.states)
            .find(|(_, u)| (*u - &u1).sobolev_norm(cfg.solver.s) >= eps)
            .map(|(t, _)| *t);
        Ok(match (exit, traj.is_completed()) {
            (Some(t), _) => t,
            (None, true) => horizon,
            (None, false) => traj.final_time(),
        })
    };

    let directions = probe_directions(u1.dim(), cfg.hold_cutoff, cfg);
    let tau0 = exit_time(u1.clone())?;
    let tau = if tau0 >= horizon { horizon } else { 0.5 * tau0 };
    let holds = |r: f64| -> Result<bool, PlannerError> {
        let times: Vec<f64> = directions
            .par_iter()
            .map(|d| exit_time(&u1 + &d.scale(r)))
            .collect::<Result<_, _>>()?;
        Ok(times.iter().all(|&t| t >= tau))
    };

    let top = eps * (1.0 - 1e-3);
    let mut lo = 0.0;
    if holds(top)? {
        lo = top;
    } else {
        let mut hi = top;
        for _ in 0..cfg.hold_bisections {
            let mid = 0.5 * (lo + hi);
            if holds(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    if lo < 1e-8 {
        return Err(PlannerError::HoldFailure { r: lo });
    }
    Ok(HoldParams {
        r: lo,
        tau,
        tau0,
        directions: directions.len(),
    })
}

/// Unit-norm `±cos`, `±sin` of the modes in the box, and `±1`.
fn probe_directions(dim: usize, cutoff: i64, cfg: &PlannerConfig) -> Vec<TrigField> {
    let mut out = Vec::new();
    for k in box_frequencies(dim, cutoff.min(cfg.solver.cutoff)) {
        if !k.is_canonical() {
            continue;
        }
        let phases: &[Phase] = if k.is_zero() { &[Phase::Cos] } else { &[Phase::Cos, Phase::Sin] };
        for &phase in phases {
            let f = TrigField::mode(k.clone(), phase, 1.0);
            let f = f.scale(1.0 / f.sobolev_norm(cfg.solver.s));
            out.push(f.scale(-1.0));
            out.push(f);
        }
    }
    out
}
