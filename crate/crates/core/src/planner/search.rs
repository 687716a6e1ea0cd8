use super::PlannerError;

pub(crate) struct Found<T> {
    pub delta: f64,
    pub error: f64,
    pub value: T,
    /// `(delta, error)` of every probe, in order; blown-up probes carry `inf`.
    pub history: Vec<(f64, f64)>,
}

/// Shrinks `delta` from `start` until `probe(delta)` reports an error within
/// `budget`.
///
/// The first steps halve. Once two finite errors are known the observed rate
/// predicts the step, limited to a factor between 1/1000 and 1/2 per probe.
/// Blown-up runs count as infinite errors. Four probes in a row without
/// improvement, or `max_probes` probes, end the search with `NoConvergence`.
pub(crate) fn search_delta<T>(
    what: &str,
    start: f64,
    budget: f64,
    max_probes: usize,
    mut probe: impl FnMut(f64) -> Result<(f64, T), PlannerError>,
) -> Result<Found<T>, PlannerError> {
    let mut delta = start;
    let mut history: Vec<(f64, f64)> = Vec::new();
    let mut best = f64::INFINITY;
    let mut stalls = 0;
    for _ in 0..max_probes {
        let error = match probe(delta) {
            Ok((error, value)) => {
                if error <= budget {
                    history.push((delta, error));
                    return Ok(Found {
                        delta,
                        error,
                        value,
                        history,
                    });
                }
                if error.is_nan() {
                    f64::INFINITY
                } else {
                    error
                }
            }
            Err(e) if e.is_blowup() => f64::INFINITY,
            Err(e) => return Err(e),
        };
        history.push((delta, error));
        if best.is_finite() {
            if error < best {
                best = error;
                stalls = 0;
            } else {
                stalls += 1;
                if stalls >= 4 {
                    break;
                }
            }
        } else {
            best = error;
        }

        let mut factor = 0.5;
        if let [.., (d_prev, e_prev), (d, e)] = history.as_slice() {
            if e.is_finite() && e_prev.is_finite() && e < e_prev {
                let rate = ((e_prev / e).ln() / (d_prev / d).ln()).clamp(0.1, 3.0);
                factor = (0.5 * budget / e).powf(1.0 / rate).clamp(1e-3, 0.5);
            }
        }
        delta *= factor;
        if delta < 1e-300 {
            break;
        }
    }
    Err(PlannerError::NoConvergence {
        what: what.to_string(),
        error: best,
        budget,
    })
}
