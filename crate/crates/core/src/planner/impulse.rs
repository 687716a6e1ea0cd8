use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ImpulseSegment, PlannerError};
use crate::solver::{endpoint, NonlinearitySpec, SimInput, SolverConfig, SolverError};
use crate::spectral::TrigField;

/// `u0 + eta - c zeta^p`, the limit of the impulse as `delta -> 0`.
pub fn ideal_jump(u0: &TrigField, seg: &ImpulseSegment, nl: &NonlinearitySpec) -> TrigField {
    let mut out = u0 + &seg.eta;
    if !seg.zeta.is_zero() {
        out = &out - &seg.zeta.power(nl.degree()).scale(nl.leading());
    }
    out
}

pub(crate) fn check_impulse(seg: &ImpulseSegment, nl: &NonlinearitySpec, cfg: &SolverConfig) -> Result<(), PlannerError> {
    seg.check()?;
    if nl.is_linear() {
        return Err(PlannerError::Precondition("impulses need a nonlinearity of degree >= 2".into()));
    }
    let reach = seg.zeta.max_frequency() * i64::from(nl.degree());
    if reach > cfg.cutoff || !seg.eta.fits_box(cfg.cutoff) {
        return Err(PlannerError::Precondition(format!(
            "cutoff {} cannot hold the p-fold products of the controls (need {reach})",
            cfg.cutoff
        )));
    }
    Ok(())
}

/// State at the end of the impulse window started from `u0`.
pub fn impulse(
    u0: &TrigField,
    seg: &ImpulseSegment,
    h: &TrigField,
    nl: &NonlinearitySpec,
    cfg: &SolverConfig,
) -> Result<TrigField, PlannerError> {
    check_impulse(seg, nl, cfg)?;
    let input = SimInput::new(u0.clone(), vec![seg.to_solver_segment(nl.degree(), h)])?;
    Ok(endpoint(&input, nl, cfg)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub delta: f64,
    /// Distance to the ideal jump; absent when the run blew up.
    pub error: Option<f64>,
    pub blown_up_at: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitStudy {
    pub rows: Vec<LimitRow>,
    pub ideal: TrigField,
    /// Least-squares slope of `log e` against `log delta` over completed rows.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Errors strictly decrease with `delta` over the completed rows.
    pub monotone: bool,
    /// Endpoint extrapolated to `delta = 0` from the three smallest completed rows.
    pub extrapolated: Option<TrigField>,
    /// Rate exponent used for the extrapolation.
    pub extrapolation_rate: Option<f64>,
    /// `||extrapolated - ideal||_s`.
    pub extrapolation_error: Option<f64>,
}

impl LimitStudy {
    pub fn smallest_error(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.error)
    }
}

/// Impulse errors over a decreasing list of `deltas`, with a log-log fit.
pub fn limit_study(
    u0: &TrigField,
    zeta: &TrigField,
    eta: &TrigField,
    h: &TrigField,
    nl: &NonlinearitySpec,
    cfg: &SolverConfig,
    deltas: &[f64],
) -> Result<LimitStudy, PlannerError> {
    limit_study_against(u0, zeta, eta, h, nl, nl, cfg, deltas)
}

/// [`limit_study`] that simulates with `dynamics` but measures against the
/// ideal jump of `model`; a mismatch shows up as a stalled error.
#[allow(clippy::too_many_arguments)]
pub fn limit_study_against(
    u0: &TrigField,
    zeta: &TrigField,
    eta: &TrigField,
    h: &TrigField,
    dynamics: &NonlinearitySpec,
    model: &NonlinearitySpec,
    cfg: &SolverConfig,
    deltas: &[f64],
) -> Result<LimitStudy, PlannerError> {
    if deltas.is_empty() || deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(PlannerError::Precondition("deltas must be a strictly decreasing list".into()));
    }
    let base = ImpulseSegment::two_control(deltas[0], zeta.clone(), eta.clone());
    let ideal = ideal_jump(u0, &base, model);
    let s = cfg.s;
    let runs: Vec<Result<TrigField, PlannerError>> = deltas
        .par_iter()
        .map(|&delta| impulse(u0, &base.with_delta(delta), h, dynamics, cfg))
        .collect();

    let mut rows = Vec::with_capacity(deltas.len());
    let mut ends = Vec::new();
    for (&delta, run) in deltas.iter().zip(runs) {
        match run {
            Ok(end) => {
                rows.push(LimitRow {
                    delta,
                    error: Some((&end - &ideal).sobolev_norm(s)),
                    blown_up_at: None,
                });
                ends.push((delta, end));
            }
            Err(PlannerError::Solver(SolverError::BlownUpAt { t, .. })) => rows.push(LimitRow {
                delta,
                error: None,
                blown_up_at: Some(t),
            }),
            Err(e) => return Err(e),
        }
    }

    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.error.filter(|e| *e > 0.0).map(|e| (r.delta.ln(), e.ln())))
        .collect();
    let (slope, intercept) = match fit_line(&points) {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    let errors: Vec<f64> = rows.iter().filter_map(|r| r.error).collect();
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);

    let (extrapolated, extrapolation_rate) = match ends.as_slice() {
        [.., (d1, e1), (d2, e2), (d3, e3)] => match extrapolate([*d1, *d2, *d3], [e1, e2, e3], s) {
            Some((limit, rate)) => (Some(limit), Some(rate)),
            None => (Some(e3.clone()), None),
        },
        [.., (_, last)] => (Some(last.clone()), None),
        [] => (None, None),
    };
    let extrapolation_error = extrapolated.as_ref().map(|l| (l - &ideal).sobolev_norm(s));
    Ok(LimitStudy {
        rows,
        ideal,
        slope,
        intercept,
        monotone,
        extrapolated,
        extrapolation_rate,
        extrapolation_error,
    })
}

/// Least-squares line `y = a x + b`.
pub(crate) fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let a = sxy / sxx;
    Some((a, my - a * mx))
}

/// Fits `E(delta) = L + A delta^g` through three endpoints without using the
/// expected limit: `g` comes from the ratio of successive differences.
fn extrapolate(d: [f64; 3], e: [&TrigField; 3], s: crate::spectral::SobolevIndex) -> Option<(TrigField, f64)> {
    let d12 = (e[0] - e[1]).sobolev_norm(s);
    let d23 = (e[1] - e[2]).sobolev_norm(s);
    if !(d12 > 0.0 && d23 > 0.0) {
        return None;
    }
    let observed = d12 / d23;
    let model = |g: f64| (d[0].powf(g) - d[1].powf(g)) / (d[1].powf(g) - d[2].powf(g));
    let (mut lo, mut hi) = (1e-3, 4.0);
    if observed <= model(lo) || observed >= model(hi) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model(mid) < observed {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let g = 0.5 * (lo + hi);
    let a = (e[1] - e[2]).scale(1.0 / (d[1].powf(g) - d[2].powf(g)));
    Some((e[2] - &a.scale(d[2].powf(g)), g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SobolevIndex;

    fn cfg() -> SolverConfig {
        SolverConfig {
            cutoff: 8,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn zero_delta_is_rejected() {
        let nl = NonlinearitySpec::monomial(3, 1.0).unwrap();
        let seg = ImpulseSegment::eta_only(0.0, TrigField::sin([1], 1.0));
        let err = impulse(&TrigField::zero(1), &seg, &TrigField::zero(1), &nl, &cfg()).unwrap_err();
        assert!(matches!(err, PlannerError::InvalidDelta(_)));
    }

    #[test]
    fn eta_impulse_reaches_eta() {
        let nl = NonlinearitySpec::monomial(3, 1.0).unwrap();
        let eta = TrigField::sin([1], 1.0);
        let seg = ImpulseSegment::eta_only(1e-4, eta.clone());
        let end = impulse(&TrigField::zero(1), &seg, &TrigField::zero(1), &nl, &cfg()).unwrap();
        let err = (&end - &eta).sobolev_norm(SobolevIndex::new(1.0).unwrap());
        assert!(err < 1e-4f64.powf(1.0 / 3.0), "{err}");
    }

    #[test]
    fn cubic_ideal_expands_exactly() {
        let nl = NonlinearitySpec::monomial(3, 1.0).unwrap();
        let seg = ImpulseSegment::two_control(1e-3, TrigField::cos([1], 1.0), TrigField::zero(1));
        let ideal = ideal_jump(&TrigField::zero(1), &seg, &nl);
        let expected = &TrigField::cos([1], -0.75) + &TrigField::cos([3], -0.25);
        assert!((&ideal - &expected).max_coefficient() < 1e-15);
    }

    #[test]
    fn cutoff_too_small_for_products() {
        let nl = NonlinearitySpec::monomial(3, 1.0).unwrap();
        let seg = ImpulseSegment::two_control(1e-3, TrigField::cos([3], 1.0), TrigField::zero(1));
        let err = impulse(&TrigField::zero(1), &seg, &TrigField::zero(1), &nl, &cfg()).unwrap_err();
        assert!(matches!(err, PlannerError::Precondition(_)));
    }

    #[test]
    fn line_fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = [1e-1, 1e-2, 1e-3].iter().map(|d: &f64| (d.ln(), (2.0 * d.powf(0.5)).ln())).collect();
        let (a, b) = fit_line(&pts).unwrap();
        assert!((a - 0.5).abs() < 1e-12 && (b - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn extrapolation_recovers_limit_of_power_law() {
        let s = SobolevIndex::new(1.0).unwrap();
        let limit = TrigField::cos([1], 1.0);
        let dir = TrigField::sin([2], 1.0);
        let d: [f64; 3] = [1e-3, 3e-4, 1e-4];
        let e: Vec<TrigField> = d.iter().map(|x| &limit + &dir.scale(x.powf(0.4))).collect();
        let (l, g) = extrapolate(d, [&e[0], &e[1], &e[2]], s).unwrap();
        assert!((g - 0.4).abs() < 1e-9);
        assert!((&l - &limit).sobolev_norm(s) < 1e-9);
    }
}
