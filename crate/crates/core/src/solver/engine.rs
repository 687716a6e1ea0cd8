//! Dense pseudo-spectral time stepping on the retained box of modes.

use rustfft::num_complex::Complex64;

use super::{Integrator, NonlinearitySpec, Segment, SolverConfig, SolverError};
use crate::spectral::{box_frequencies, sobolev_weight, Frequency, GridTransform, TrigField};

/// Complex coefficients of the retained modes, in the order of `Engine::active`.
pub(crate) type State = Vec<Complex64>;

pub(crate) struct Engine<'a> {
    nl: &'a NonlinearitySpec,
    cfg: &'a SolverConfig,
    grid: GridTransform,
    /// Grid index of every retained mode.
    active: Vec<usize>,
    frequencies: Vec<Frequency>,
    /// `|k|^2` per retained mode.
    k2: Vec<f64>,
    weight: Vec<f64>,
    buf: Vec<Complex64>,
}

/// Per-window data that stays fixed while stepping.
pub(crate) struct Prepared {
    /// `nu * Lap zeta + h + eta` on the retained modes.
    forcing: State,
    /// Physical samples of `zeta`, or `None` when `zeta = 0`.
    zeta: Option<Vec<f64>>,
}

/// Step-size dependent factors of the linear part.
struct LinearFactors {
    h: f64,
    /// `exp(-nu |k|^2 h)`.
    decay: Vec<f64>,
    /// `h phi_1(z)` and `h phi_2(z)` with `z = -nu |k|^2 h`.
    phi1: Vec<f64>,
    phi2: Vec<f64>,
}

pub(crate) struct Blowup {
    pub t: f64,
    pub state: State,
    pub norm: f64,
}

impl<'a> Engine<'a> {
    pub fn new(dim: usize, nl: &'a NonlinearitySpec, cfg: &'a SolverConfig) -> Result<Self, SolverError> {
        cfg.validate()?;
        let grid = GridTransform::new(dim, cfg.grid_points(nl.degree()));
        let frequencies = box_frequencies(dim, cfg.cutoff);
        let active = frequencies.iter().map(|k| grid.index_of(k)).collect();
        let k2 = frequencies.iter().map(|k| k.norm_sq() as f64).collect();
        let weight = frequencies.iter().map(|k| sobolev_weight(k.norm_sq(), cfg.s)).collect();
        let buf = vec![Complex64::new(0.0, 0.0); grid.len()];
        Ok(Engine {
            nl,
            cfg,
            grid,
            active,
            frequencies,
            k2,
            weight,
            buf,
        })
    }

    fn check_fits(&self, f: &TrigField, what: &str) -> Result<(), SolverError> {
        if f.fits_box(self.cfg.cutoff) {
            Ok(())
        } else {
            Err(SolverError::Config(format!(
                "{what} has modes beyond the cutoff {} (max |k|_inf = {})",
                self.cfg.cutoff,
                f.max_frequency()
            )))
        }
    }

    pub fn load(&self, f: &TrigField) -> Result<State, SolverError> {
        self.check_fits(f, "initial state")?;
        Ok(self.load_unchecked(f))
    }

    fn load_unchecked(&self, f: &TrigField) -> State {
        let mut full = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        f.write_spectral_array(&self.grid, &mut full);
        self.active.iter().map(|&i| full[i]).collect()
    }

    pub fn unload(&self, u: &State) -> TrigField {
        let table = self
            .frequencies
            .iter()
            .zip(u)
            .filter(|(k, _)| k.is_canonical())
            .map(|(k, c)| (k.clone(), *c));
        TrigField::from_canonical_complex(self.grid.dim(), table)
    }

    pub fn norm(&self, u: &State) -> f64 {
        u.iter()
            .zip(&self.weight)
            .map(|(c, w)| w * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn prepare(&self, seg: &Segment) -> Result<Prepared, SolverError> {
        for (name, f) in [("zeta", &seg.zeta), ("eta", &seg.eta), ("h", &seg.h)] {
            self.check_fits(f, name)?;
        }
        let drive = (&seg.h + &seg.eta).axpy(self.cfg.nu, &seg.zeta.laplacian())?;
        let zeta = (!seg.zeta.is_zero())
            .then(|| seg.zeta.to_grid_samples(&self.grid).iter().map(|z| z.re).collect());
        Ok(Prepared {
            forcing: self.load_unchecked(&drive),
            zeta,
        })
    }

    /// `nu Lap zeta + h + eta - P_N f(u + zeta)`.
    fn nonlinear(&mut self, u: &State, prep: &Prepared, out: &mut State) {
        if self.nl.is_linear() {
            out.copy_from_slice(&prep.forcing);
            return;
        }
        self.buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (&i, c) in self.active.iter().zip(u) {
            self.buf[i] = *c;
        }
        self.grid.to_physical(&mut self.buf);
        match &prep.zeta {
            Some(z) => {
                for (b, zx) in self.buf.iter_mut().zip(z) {
                    *b = Complex64::new(self.nl.eval(b.re + zx), 0.0);
                }
            }
            None => {
                for b in self.buf.iter_mut() {
                    *b = Complex64::new(self.nl.eval(b.re), 0.0);
                }
            }
        }
        self.grid.to_spectral(&mut self.buf);
        for ((o, &i), f) in out.iter_mut().zip(&self.active).zip(&prep.forcing) {
            *o = f - self.buf[i];
        }
    }

    fn factors(&self, h: f64) -> LinearFactors {
        let mut decay = Vec::with_capacity(self.k2.len());
        let mut phi1 = Vec::with_capacity(self.k2.len());
        let mut phi2 = Vec::with_capacity(self.k2.len());
        for &k2 in &self.k2 {
            let z = -self.cfg.nu * k2 * h;
            decay.push(z.exp());
            let (p1, p2) = phi_functions(z);
            phi1.push(h * p1);
            phi2.push(h * p2);
        }
        LinearFactors { h, decay, phi1, phi2 }
    }

    /// Advances `u` across one window, calling `observe(step, t_local, u, norm)`
    /// after every step. Returns the blow-up point if the norm crosses the
    /// threshold or stops being finite.
    pub fn run_window(
        &mut self,
        u: &mut State,
        prep: &Prepared,
        duration: f64,
        mut observe: impl FnMut(usize, usize, f64, &State, f64),
    ) -> Result<(), Blowup> {
        let steps = self.cfg.steps_for(duration);
        let lin = self.factors(duration / steps as f64);
        let n = u.len();
        let mut n0 = vec![Complex64::new(0.0, 0.0); n];
        let mut n1 = vec![Complex64::new(0.0, 0.0); n];
        let mut prev: Option<(State, State)> = None;
        for step in 1..=steps {
            self.nonlinear(u, prep, &mut n0);
            match self.cfg.integrator {
                Integrator::ExponentialRk2 => {
                    let a: State = (0..n).map(|i| lin.decay[i] * u[i] + lin.phi1[i] * n0[i]).collect();
                    self.nonlinear(&a, prep, &mut n1);
                    for i in 0..n {
                        u[i] = a[i] + lin.phi2[i] * (n1[i] - n0[i]);
                    }
                }
                Integrator::ImexEuler => self.euler(u, &n0, &lin),
                Integrator::ImexBdf2 => {
                    let before = u.clone();
                    match &prev {
                        // Each window restarts with one Euler step: the forcing jumps at its start.
                        None => self.euler(u, &n0, &lin),
                        Some((u_prev, n_prev)) => {
                            for i in 0..n {
                                let rhs = 4.0 * u[i] - u_prev[i] + 2.0 * lin.h * (2.0 * n0[i] - n_prev[i]);
                                u[i] = rhs / (3.0 + 2.0 * lin.h * self.cfg.nu * self.k2[i]);
                            }
                        }
                    }
                    prev = Some((before, n0.clone()));
                }
            }
            let t = lin.h * step as f64;
            let norm = self.norm(u);
            observe(step, steps, t, u, norm);
            if !(norm <= self.cfg.blowup_threshold) {
                return Err(Blowup {
                    t,
                    state: u.clone(),
                    norm,
                });
            }
        }
        Ok(())
    }

    fn euler(&self, u: &mut State, n0: &State, lin: &LinearFactors) {
        for i in 0..u.len() {
            u[i] = (u[i] + lin.h * n0[i]) / (1.0 + lin.h * self.cfg.nu * self.k2[i]);
        }
    }
}

/// `phi_1(z) = (e^z - 1)/z` and `phi_2(z) = (e^z - 1 - z)/z^2`, with series
/// near zero where the closed forms cancel.
fn phi_functions(z: f64) -> (f64, f64) {
    if z.abs() < 1e-2 {
        let p1 = 1.0 + z * (1.0 / 2.0 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)));
        let p2 = 0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z * (1.0 / 120.0 + z / 720.0)));
        (p1, p2)
    } else {
        let em1 = z.exp_m1();
        (em1 / z, (em1 - z) / (z * z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_series_matches_closed_form_near_switch() {
        for z in [-1.01e-2, -0.5e-2, 0.9e-2] {
            let (a1, a2) = phi_functions(z);
            let em1: f64 = z.exp_m1();
            assert!((a1 - em1 / z).abs() < 1e-13);
            assert!((a2 - (em1 - z) / (z * z)).abs() < 1e-9);
        }
        assert_eq!(phi_functions(0.0), (1.0, 0.5));
    }
}
