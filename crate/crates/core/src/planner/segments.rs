use serde::{Deserialize, Serialize};

use super::PlannerError;
use crate::solver::{Segment, SimInput};
use crate::spectral::TrigField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpulseKind {
    /// Applies `delta^(-1/p) zeta` and `delta^(-1) eta` for a window of length `delta`.
    TwoControl,
    /// Applies only `delta^(-1) eta`; `zeta` is zero.
    EtaOnly,
}

/// A short window realizing, as `delta -> 0`, the jump `u -> u + eta - c zeta^p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpulseSegment {
    pub delta: f64,
    pub zeta: TrigField,
    pub eta: TrigField,
    pub kind: ImpulseKind,
}

impl ImpulseSegment {
    pub fn eta_only(delta: f64, eta: TrigField) -> Self {
        let dim = eta.dim();
        ImpulseSegment {
            delta,
            zeta: TrigField::zero(dim),
            eta,
            kind: ImpulseKind::EtaOnly,
        }
    }

    pub fn two_control(delta: f64, zeta: TrigField, eta: TrigField) -> Self {
        ImpulseSegment {
            delta,
            zeta,
            eta,
            kind: ImpulseKind::TwoControl,
        }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        ImpulseSegment {
            delta,
            ..self.clone()
        }
    }

    pub fn check(&self) -> Result<(), PlannerError> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(PlannerError::InvalidDelta(self.delta));
        }
        if self.kind == ImpulseKind::EtaOnly && !self.zeta.is_zero() {
            return Err(PlannerError::Precondition("eta-only segment with nonzero zeta".into()));
        }
        Ok(())
    }

    /// Solver window with the scaled controls `delta^(-1/p) zeta`, `h + delta^(-1) eta`.
    pub fn to_solver_segment(&self, p: u32, h: &TrigField) -> Segment {
        let mu = self.delta.powf(-1.0 / p as f64);
        Segment::coast(h.dim(), self.delta)
            .with_zeta(self.zeta.scale(mu))
            .with_eta(self.eta.scale(1.0 / self.delta))
            .with_h(h.clone())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PlanSegment {
    Impulse(ImpulseSegment),
    Coast(f64),
}

impl PlanSegment {
    pub fn duration(&self) -> f64 {
        match self {
            PlanSegment::Impulse(seg) => seg.delta,
            PlanSegment::Coast(t) => *t,
        }
    }

    pub fn to_solver_segment(&self, p: u32, h: &TrigField) -> Segment {
        match self {
            PlanSegment::Impulse(seg) => seg.to_solver_segment(p, h),
            PlanSegment::Coast(t) => Segment::coast(h.dim(), *t).with_h(h.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlPlan {
    pub segments: Vec<PlanSegment>,
    pub total_time: f64,
    pub target: TrigField,
    pub epsilon: f64,
}

impl ControlPlan {
    pub fn new(segments: Vec<PlanSegment>, target: TrigField, epsilon: f64) -> Self {
        let total_time = segments.iter().map(PlanSegment::duration).fold(0.0, |a, b| a + b);
        ControlPlan {
            segments,
            total_time,
            target,
            epsilon,
        }
    }

    pub fn impulses(&self) -> impl Iterator<Item = &ImpulseSegment> {
        self.segments.iter().filter_map(|s| match s {
            PlanSegment::Impulse(seg) => Some(seg),
            PlanSegment::Coast(_) => None,
        })
    }

    pub fn is_eta_only(&self) -> bool {
        self.impulses().all(|s| s.kind == ImpulseKind::EtaOnly)
    }

    pub fn to_sim_input(&self, u0: &TrigField, p: u32, h: &TrigField) -> Result<SimInput, PlannerError> {
        let segments = self.segments.iter().map(|s| s.to_solver_segment(p, h)).collect();
        Ok(SimInput::new(u0.clone(), segments)?)
    }

    pub fn to_json(&self) -> PlanJson {
        let mut fields: Vec<TrigField> = Vec::new();
        let mut intern = |f: &TrigField| match fields.iter().position(|g| g == f) {
            Some(i) => i,
            None => {
                fields.push(f.clone());
                fields.len() - 1
            }
        };
        let target = intern(&self.target);
        let segments = self
            .segments
            .iter()
            .map(|s| match s {
                PlanSegment::Coast(t) => SegmentJson::Coast { duration: *t },
                PlanSegment::Impulse(seg) => match seg.kind {
                    ImpulseKind::TwoControl => SegmentJson::TwoControl {
                        delta: seg.delta,
                        zeta: intern(&seg.zeta),
                        eta: intern(&seg.eta),
                    },
                    ImpulseKind::EtaOnly => SegmentJson::EtaOnly {
                        delta: seg.delta,
                        eta: intern(&seg.eta),
                    },
                },
            })
            .collect();
        PlanJson {
            total_time: self.total_time,
            epsilon: self.epsilon,
            target,
            fields,
            segments,
        }
    }

    pub fn from_json(json: &PlanJson) -> Result<Self, PlannerError> {
        let field = |i: usize| {
            json.fields
                .get(i)
                .cloned()
                .ok_or_else(|| PlannerError::Precondition(format!("plan references missing field {i}")))
        };
        let mut segments = Vec::with_capacity(json.segments.len());
        for s in &json.segments {
            segments.push(match s {
                SegmentJson::Coast { duration } => PlanSegment::Coast(*duration),
                SegmentJson::TwoControl { delta, zeta, eta } => {
                    PlanSegment::Impulse(ImpulseSegment::two_control(*delta, field(*zeta)?, field(*eta)?))
                }
                SegmentJson::EtaOnly { delta, eta } => PlanSegment::Impulse(ImpulseSegment::eta_only(*delta, field(*eta)?)),
            });
        }
        Ok(ControlPlan::new(segments, field(json.target)?, json.epsilon))
    }
}

/// Serialized plan: fields are stored once and referenced by index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanJson {
    pub total_time: f64,
    pub epsilon: f64,
    pub target: usize,
    pub fields: Vec<TrigField>,
    pub segments: Vec<SegmentJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentJson {
    Coast { duration: f64 },
    TwoControl { delta: f64, zeta: usize, eta: usize },
    EtaOnly { delta: f64, eta: usize },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_shares_fields() {
        let z = TrigField::cos([1], 1.0);
        let plan = ControlPlan::new(
            vec![
                PlanSegment::Impulse(ImpulseSegment::two_control(1e-3, z.clone(), TrigField::zero(1))),
                PlanSegment::Coast(0.5),
                PlanSegment::Impulse(ImpulseSegment::eta_only(2e-3, z.clone())),
            ],
            z.clone(),
            0.1,
        );
        assert!((plan.total_time - 0.503).abs() < 1e-15);
        assert!(!plan.is_eta_only());
        let json = plan.to_json();
        assert_eq!(json.fields.len(), 2);
        let text = serde_json::to_string(&json).unwrap();
        let back: PlanJson = serde_json::from_str(&text).unwrap();
        assert_eq!(ControlPlan::from_json(&back).unwrap(), plan);
        assert!(text.contains(r#""kind":"two_control""#));
    }

    #[test]
    fn invalid_delta_rejected() {
        let seg = ImpulseSegment::eta_only(0.0, TrigField::sin([1], 1.0));
        assert!(matches!(seg.check(), Err(PlannerError::InvalidDelta(_))));
    }
}
