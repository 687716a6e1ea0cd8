//! Resolving operator for
//!
//! ```text
//! du/dt - nu Lap(u + zeta) + f(u + zeta) = h + eta   on T^d
//! ```
//!
//! with piecewise-constant controls. The state is Galerkin-truncated to
//! `|k|_inf <= cutoff`; diffusion is treated exactly or implicitly per mode and
//! `f` is evaluated on a grid fine enough that the polynomial part does not
//! alias into the retained modes.

mod config;
mod engine;
mod input;
mod nonlinearity;
mod probe;
mod trajectory;

pub use config::{Integrator, SolverConfig};
pub use input::{Segment, SimInput};
pub use nonlinearity::NonlinearitySpec;
pub use probe::{stability_probe, Perturbation, ProbeRow, StabilityReport};
pub use trajectory::{mode_support, Status, Trajectory, TrajectorySummary};

use engine::Engine;

use crate::spectral::{SpectralError, TrigField};

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solution blew up at t = {t} (norm {norm:e})")]
    BlownUpAt { t: f64, norm: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("export failed: {0}")]
    Export(String),
}

impl From<csv::Error> for SolverError {
    fn from(e: csv::Error) -> Self {
        SolverError::Export(e.to_string())
    }
}

impl From<std::io::Error> for SolverError {
    fn from(e: std::io::Error) -> Self {
        SolverError::Export(e.to_string())
    }
}

fn check_input(input: &SimInput, nl: &NonlinearitySpec, cfg: &SolverConfig) -> Result<(), SolverError> {
    input.validate()?;
    if let Some(w) = nl.regime_warning(cfg.s) {
        log::warn!("{w}");
    }
    Ok(())
}

/// Integrates `input` and records the trajectory. Crossing the blow-up
/// threshold ends the run with status `BlownUpAt`; the offending state is the
/// last sample.
pub fn resolve(input: &SimInput, nl: &NonlinearitySpec, cfg: &SolverConfig) -> Result<Trajectory, SolverError> {
    check_input(input, nl, cfg)?;
    let mut engine = Engine::new(input.dim(), nl, cfg)?;
    let mut u = engine.load(&input.u0)?;
    let norm0 = engine.norm(&u);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![input.u0.clone()],
        norms: vec![norm0],
        status: Status::Completed,
    };
    if !(norm0 <= cfg.blowup_threshold) {
        traj.status = Status::BlownUpAt(0.0);
        return Ok(traj);
    }
    let mut t0 = 0.0;
    for seg in &input.segments {
        let prep = engine.prepare(seg)?;
        let mut samples = Vec::new();
        let outcome = engine.run_window(&mut u, &prep, seg.duration, |step, steps, t, state, norm| {
            if step % cfg.record_stride == 0 || step == steps {
                samples.push((t0 + t, state.clone(), norm));
            }
        });
        for (t, state, norm) in samples {
            traj.times.push(t);
            traj.states.push(engine.unload(&state));
            traj.norms.push(norm);
        }
        if let Err(b) = outcome {
            if traj.times.last() != Some(&(t0 + b.t)) {
                traj.times.push(t0 + b.t);
                traj.states.push(engine.unload(&b.state));
                traj.norms.push(b.norm);
            }
            traj.status = Status::BlownUpAt(t0 + b.t);
            return Ok(traj);
        }
        t0 += seg.duration;
    }
    Ok(traj)
}

/// Final state of the run, without recording.
pub fn endpoint(input: &SimInput, nl: &NonlinearitySpec, cfg: &SolverConfig) -> Result<TrigField, SolverError> {
    check_input(input, nl, cfg)?;
    let mut engine = Engine::new(input.dim(), nl, cfg)?;
    let mut u = engine.load(&input.u0)?;
    let norm0 = engine.norm(&u);
    if !(norm0 <= cfg.blowup_threshold) {
        return Err(SolverError::BlownUpAt { t: 0.0, norm: norm0 });
    }
    let mut t0 = 0.0;
    for seg in &input.segments {
        let prep = engine.prepare(seg)?;
        engine
            .run_window(&mut u, &prep, seg.duration, |_, _, _, _, _| {})
            .map_err(|b| SolverError::BlownUpAt { t: t0 + b.t, norm: b.norm })?;
        t0 += seg.duration;
    }
    Ok(engine.unload(&u))
}
