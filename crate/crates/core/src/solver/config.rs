use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::spectral::SobolevIndex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// First-order implicit diffusion, explicit nonlinearity.
    ImexEuler,
    /// Second-order semi-implicit backward differentiation.
    ImexBdf2,
    /// Second-order exponential Runge-Kutta (exact diffusion).
    ExponentialRk2,
}

impl Integrator {
    pub fn order(self) -> u32 {
        match self {
            Integrator::ImexEuler => 1,
            Integrator::ImexBdf2 | Integrator::ExponentialRk2 => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Diffusion coefficient.
    pub nu: f64,
    /// Sobolev index for norms and the blow-up detector.
    pub s: SobolevIndex,
    /// Retained modes satisfy `|k|_inf <= cutoff`.
    pub cutoff: i64,
    /// Base time step.
    pub dt: f64,
    /// A trajectory whose `H^s` norm exceeds this value is declared blown up.
    pub blowup_threshold: f64,
    /// The grid has at least `oversample * (2 cutoff + 1)` points per axis.
    pub oversample: usize,
    pub integrator: Integrator,
    /// Every control segment gets at least this many steps, so short impulse
    /// windows are resolved as finely as long ones.
    pub min_segment_steps: usize,
    /// Record a state every this many steps (segment ends are always recorded).
    pub record_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            nu: 1.0,
            s: SobolevIndex::new(1.0).expect("valid index"),
            cutoff: 16,
            dt: 1e-3,
            blowup_threshold: 1e6,
            oversample: 2,
            integrator: Integrator::ExponentialRk2,
            min_segment_steps: 200,
            record_stride: 100,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |what: &str| Err(SolverError::Config(what.to_string()));
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return bad("nu must be positive");
        }
        if self.cutoff < 1 {
            return bad("cutoff must be at least 1");
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.blowup_threshold > 0.0) {
            return bad("blowup_threshold must be positive");
        }
        if self.oversample < 1 {
            return bad("oversample must be at least 1");
        }
        if self.min_segment_steps < 1 || self.record_stride < 1 {
            return bad("min_segment_steps and record_stride must be at least 1");
        }
        Ok(())
    }

    /// Points per axis: enough to evaluate a degree-`p` polynomial of a
    /// band-`N` field without aliasing into the retained band, and at least
    /// the oversampled band, rounded up to a 2-3-5 smooth size.
    pub fn grid_points(&self, degree: u32) -> usize {
        let n = self.cutoff as usize;
        let need = ((degree as usize + 1) * n + 1).max(self.oversample * (2 * n + 1));
        (need..).find(|&m| is_smooth(m)).expect("smooth sizes are unbounded")
    }

    /// Number of steps for a window of the given length.
    pub fn steps_for(&self, duration: f64) -> usize {
        ((duration / self.dt).ceil() as usize).max(self.min_segment_steps)
    }
}

fn is_smooth(mut m: usize) -> bool {
    for f in [2, 3, 5] {
        while m.is_multiple_of(f) {
            m /= f;
        }
    }
    m == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_alias_free_and_smooth() {
        let cfg = SolverConfig {
            cutoff: 32,
            ..SolverConfig::default()
        };
        let m = cfg.grid_points(3);
        assert!(m > 4 * 32 && is_smooth(m));
        assert_eq!(m, 135);
    }

    #[test]
    fn step_counts() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.steps_for(1.0), 1000);
        assert_eq!(cfg.steps_for(1e-6), 200);
    }

    #[test]
    fn json_defaults() {
        let cfg: SolverConfig = serde_json::from_str(r#"{"nu":0.1,"integrator":"imex_bdf2"}"#).unwrap();
        assert_eq!(cfg.nu, 0.1);
        assert_eq!(cfg.integrator, Integrator::ImexBdf2);
        assert_eq!(cfg.blowup_threshold, 1e6);
        assert!(cfg.validate().is_ok());
        let bad = SolverConfig { dt: 0.0, ..cfg };
        assert!(bad.validate().is_err());
    }
}
