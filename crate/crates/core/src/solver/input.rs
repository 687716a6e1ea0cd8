use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::spectral::TrigField;

/// A window on which the controls `zeta`, `eta` and the forcing `h` are constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub zeta: TrigField,
    pub eta: TrigField,
    pub h: TrigField,
}

impl Segment {
    pub fn coast(dim: usize, duration: f64) -> Self {
        Segment {
            duration,
            zeta: TrigField::zero(dim),
            eta: TrigField::zero(dim),
            h: TrigField::zero(dim),
        }
    }

    pub fn with_zeta(mut self, zeta: TrigField) -> Self {
        self.zeta = zeta;
        self
    }

    pub fn with_eta(mut self, eta: TrigField) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_h(mut self, h: TrigField) -> Self {
        self.h = h;
        self
    }
}

/// Initial state plus piecewise-constant controls, stored as consecutive
/// windows of positive length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimInput {
    pub u0: TrigField,
    pub segments: Vec<Segment>,
}

impl SimInput {
    pub fn new(u0: TrigField, segments: Vec<Segment>) -> Result<Self, SolverError> {
        let input = SimInput { u0, segments };
        input.validate()?;
        Ok(input)
    }

    /// Zero controls and forcing over `[0, horizon]`.
    pub fn free(u0: TrigField, horizon: f64) -> Result<Self, SolverError> {
        let dim = u0.dim();
        Self::new(u0, vec![Segment::coast(dim, horizon)])
    }

    /// Builds windows from breakpoints `0 = t_0 < t_1 < ... < t_n = T`;
    /// `zetas[i]`, `etas[i]`, `hs[i]` act on `[t_i, t_{i+1})`.
    pub fn from_piecewise(
        u0: TrigField,
        breakpoints: &[f64],
        zetas: Vec<TrigField>,
        etas: Vec<TrigField>,
        hs: Vec<TrigField>,
    ) -> Result<Self, SolverError> {
        let n = breakpoints.len().saturating_sub(1);
        if n == 0 || zetas.len() != n || etas.len() != n || hs.len() != n {
            return Err(SolverError::Config(
                "piecewise input needs n+1 breakpoints and n values per control".into(),
            ));
        }
        if breakpoints[0] != 0.0 {
            return Err(SolverError::Config("first breakpoint must be 0".into()));
        }
        let segments = breakpoints
            .windows(2)
            .zip(zetas.into_iter().zip(etas).zip(hs))
            .map(|(w, ((zeta, eta), h))| Segment {
                duration: w[1] - w[0],
                zeta,
                eta,
                h,
            })
            .collect();
        Self::new(u0, segments)
    }

    pub fn dim(&self) -> usize {
        self.u0.dim()
    }

    pub fn horizon(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let dim = self.dim();
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.duration.is_finite() && seg.duration > 0.0) {
                return Err(SolverError::Config(format!(
                    "segment {i} has non-positive duration {}",
                    seg.duration
                )));
            }
            for (name, f) in [("zeta", &seg.zeta), ("eta", &seg.eta), ("h", &seg.h)] {
                if f.dim() != dim {
                    return Err(SolverError::Config(format!(
                        "segment {i}: {name} has dimension {}, expected {dim}",
                        f.dim()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest `|k|_inf` in the initial state or any control.
    pub fn max_frequency(&self) -> i64 {
        self.segments
            .iter()
            .flat_map(|s| [&s.zeta, &s.eta, &s.h])
            .chain(std::iter::once(&self.u0))
            .map(TrigField::max_frequency)
            .max()
            .unwrap_or(0)
    }
}
