use serde::{Deserialize, Serialize};

use super::{resolve, NonlinearitySpec, SimInput, SolverConfig, SolverError, Status};
use crate::spectral::{SobolevIndex, TrigField};

/// A perturbation of the initial state, of `zeta`, and of `phi = h + eta`,
/// the last two applied uniformly over the whole horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub du0: TrigField,
    pub dzeta: TrigField,
    pub dphi: TrigField,
}

impl Perturbation {
    pub fn initial(du0: TrigField) -> Self {
        let dim = du0.dim();
        Perturbation {
            du0,
            dzeta: TrigField::zero(dim),
            dphi: TrigField::zero(dim),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Perturbation {
            du0: self.du0.scale(factor),
            dzeta: self.dzeta.scale(factor),
            dphi: self.dphi.scale(factor),
        }
    }

    /// `||du0||_s + ||dzeta||_{s+1} + ||dphi||_{L2(0,T; H^{s-1})}`.
    pub fn size(&self, s: SobolevIndex, horizon: f64) -> f64 {
        let s = s.value();
        weighted_norm(&self.du0, s) + weighted_norm(&self.dzeta, s + 1.0) + horizon.sqrt() * weighted_norm(&self.dphi, s - 1.0)
    }

    fn apply(&self, base: &SimInput) -> SimInput {
        let mut input = base.clone();
        input.u0 = &input.u0 + &self.du0;
        for seg in &mut input.segments {
            seg.zeta = &seg.zeta + &self.dzeta;
            seg.h = &seg.h + &self.dphi;
        }
        input
    }
}

/// `(sum_k (1+|k|^2)^e |u_k|^2)^(1/2)` for any real exponent `e`.
fn weighted_norm(f: &TrigField, e: f64) -> f64 {
    f.iter()
        .map(|(k, m)| {
            if k.is_zero() {
                m.cos * m.cos
            } else {
                (1.0 + k.norm_sq() as f64).powf(e) * 0.5 * (m.cos * m.cos + m.sin * m.sin)
            }
        })
        .fold(0.0, |acc, x| acc + x)
        .sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub size: f64,
    /// `max_t ||u_perturbed(t) - u_base(t)||_s` over every step.
    pub deviation: f64,
    /// `deviation / size` (0 for a zero perturbation).
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Rows in order of decreasing size.
    pub rows: Vec<ProbeRow>,
    /// `||zeta||_{C(H^{s+1})} + ||h + eta||_{L2(H^{s-1})} + ||u||_{C(H^s)}` of the base run.
    pub lambda: f64,
    /// Relative change of the ratio between the two smallest sizes.
    pub ratio_change: f64,
    /// Whether `ratio_change < 0.1`, i.e. the ratios have settled.
    pub stabilized: bool,
}

/// Measures how far trajectories move under shrinking perturbations of the
/// data, as a witness of local Lipschitz dependence.
pub fn stability_probe(
    base: &SimInput,
    nl: &NonlinearitySpec,
    cfg: &SolverConfig,
    perturbations: &[Perturbation],
) -> Result<StabilityReport, SolverError> {
    let cfg = SolverConfig {
        record_stride: 1,
        ..cfg.clone()
    };
    let reference = resolve(base, nl, &cfg)?;
    reference.endpoint()?;
    let horizon = base.horizon();
    let s = cfg.s;

    let mut rows = Vec::with_capacity(perturbations.len());
    for p in perturbations {
        let traj = resolve(&p.apply(base), nl, &cfg)?;
        if let Status::BlownUpAt(t) = traj.status {
            return Err(SolverError::BlownUpAt {
                t,
                norm: *traj.norms.last().unwrap(),
            });
        }
        let deviation = traj
            .states
            .iter()
            .zip(&reference.states)
            .map(|(a, b)| (a - b).sobolev_norm(s))
            .fold(0.0, f64::max);
        let size = p.size(s, horizon);
        let ratio = if size > 0.0 { deviation / size } else { 0.0 };
        rows.push(ProbeRow { size, deviation, ratio });
    }
    rows.sort_by(|a, b| b.size.total_cmp(&a.size));

    let zeta_max = base
        .segments
        .iter()
        .map(|seg| weighted_norm(&seg.zeta, s.value() + 1.0))
        .fold(0.0, f64::max);
    let phi_l2 = base
        .segments
        .iter()
        .map(|seg| seg.duration * weighted_norm(&(&seg.h + &seg.eta), s.value() - 1.0).powi(2))
        .fold(0.0, |acc, x| acc + x)
        .sqrt();
    let u_max = reference.norms.iter().cloned().fold(0.0, f64::max);

    let ratio_change = match rows.as_slice() {
        [.., a, b] => {
            let scale = a.ratio.abs().max(b.ratio.abs());
            if scale == 0.0 {
                0.0
            } else {
                (a.ratio - b.ratio).abs() / scale
            }
        }
        _ => 0.0,
    };
    Ok(StabilityReport {
        rows,
        lambda: zeta_max + phi_l2 + u_max,
        ratio_change,
        stabilized: ratio_change < 0.1,
    })
}
