use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::ops::{Add, Mul, Neg, Sub};

use super::{Frequency, GridTransform, Phase, ScalarFunction, SobolevIndex, SpectralError};

/// Coefficients with magnitude below this are dropped after every operation.
pub const PRUNE_TOL: f64 = 1e-14;

/// Above this many coefficient pairs `multiply` switches to the FFT path.
pub const EXACT_PAIR_LIMIT: usize = 1_000_000;

/// Cosine/sine coefficients of one canonical mode.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mode {
    pub cos: f64,
    pub sin: f64,
}

/// A real trigonometric polynomial on `T^d`:
/// `u(x) = sum_k a_k cos<x,k> + b_k sin<x,k>` over canonical `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawField", into = "RawField")]
pub struct TrigField {
    dim: usize,
    modes: BTreeMap<Frequency, Mode>,
}

impl TrigField {
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "torus dimension must be at least 1");
        TrigField {
            dim,
            modes: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        let mut f = Self::zero(dim);
        f.add_term(&Frequency::zero(dim), Phase::Cos, value);
        f
    }

    /// `amplitude * cos<x,k>`.
    pub fn cos(k: impl Into<Frequency>, amplitude: f64) -> Self {
        Self::mode(k, Phase::Cos, amplitude)
    }

    /// `amplitude * sin<x,k>`.
    pub fn sin(k: impl Into<Frequency>, amplitude: f64) -> Self {
        Self::mode(k, Phase::Sin, amplitude)
    }

    pub fn mode(k: impl Into<Frequency>, phase: Phase, amplitude: f64) -> Self {
        let k = k.into();
        let mut f = Self::zero(k.dim());
        f.add_term(&k, phase, amplitude);
        f
    }

    /// Builds a field from `(k, cos, sin)` triples; non-canonical keys are
    /// folded onto their representative (`sin<x,-k> = -sin<x,k>`).
    pub fn from_terms(
        dim: usize,
        terms: impl IntoIterator<Item = (Frequency, f64, f64)>,
    ) -> Result<Self, SpectralError> {
        let mut f = Self::zero(dim);
        for (k, a, b) in terms {
            if k.dim() != dim {
                return Err(SpectralError::DimensionMismatch {
                    left: dim,
                    right: k.dim(),
                });
            }
            f.add_term(&k, Phase::Cos, a);
            f.add_term(&k, Phase::Sin, b);
        }
        Ok(f)
    }

    /// Adds `amplitude * cos<x,k>` or `amplitude * sin<x,k>` in place.
    pub fn add_term(&mut self, k: &Frequency, phase: Phase, amplitude: f64) {
        assert_eq!(k.dim(), self.dim, "frequency dimension mismatch");
        if amplitude == 0.0 {
            return;
        }
        let (key, flipped) = k.canonical();
        let zero = key.is_zero();
        let entry = self.modes.entry(key.clone()).or_default();
        match phase {
            Phase::Cos => entry.cos += amplitude,
            Phase::Sin if zero => {}
            Phase::Sin => entry.sin += if flipped { -amplitude } else { amplitude },
        }
        self.prune_key(&key);
    }

    fn prune_key(&mut self, key: &Frequency) {
        if let Some(m) = self.modes.get_mut(key) {
            if m.cos.abs() < PRUNE_TOL {
                m.cos = 0.0;
            }
            if m.sin.abs() < PRUNE_TOL {
                m.sin = 0.0;
            }
            if m.cos == 0.0 && m.sin == 0.0 {
                self.modes.remove(key);
            }
        }
    }

    fn pruned(mut self) -> Self {
        self.modes.retain(|_, m| {
            if m.cos.abs() < PRUNE_TOL {
                m.cos = 0.0;
            }
            if m.sin.abs() < PRUNE_TOL {
                m.sin = 0.0;
            }
            !(m.cos == 0.0 && m.sin == 0.0)
        });
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    /// Number of stored (canonical) modes.
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Frequency, &Mode)> {
        self.modes.iter()
    }

    /// Canonical frequencies with a nonzero coefficient.
    pub fn support(&self) -> impl Iterator<Item = &Frequency> {
        self.modes.keys()
    }

    /// Coefficients of `cos<x,k>`, `sin<x,k>` for any (possibly non-canonical) `k`.
    pub fn coefficient(&self, k: &Frequency) -> Mode {
        let (key, flipped) = k.canonical();
        let m = self.modes.get(&key).copied().unwrap_or_default();
        if flipped {
            Mode {
                cos: m.cos,
                sin: -m.sin,
            }
        } else {
            m
        }
    }

    pub fn get(&self, k: &Frequency, phase: Phase) -> f64 {
        let m = self.coefficient(k);
        match phase {
            Phase::Cos => m.cos,
            Phase::Sin => m.sin,
        }
    }

    /// `|k|_inf` over the support (0 for the zero field).
    pub fn max_frequency(&self) -> i64 {
        self.modes.keys().map(Frequency::max_abs).max().unwrap_or(0)
    }

    /// Largest coefficient magnitude.
    pub fn max_coefficient(&self) -> f64 {
        self.modes
            .values()
            .map(|m| m.cos.abs().max(m.sin.abs()))
            .fold(0.0, f64::max)
    }

    /// Point evaluation `u(x)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        self.modes
            .iter()
            .map(|(k, m)| {
                let t = k.dot(x);
                m.cos * t.cos() + m.sin * t.sin()
            })
            .sum()
    }

    /// Complex exponential coefficient `u_k` (with `u_{-k} = conj(u_k)`).
    pub fn complex_coefficient(&self, k: &Frequency) -> Complex64 {
        let m = self.coefficient(k);
        if k.is_zero() {
            Complex64::new(m.cos, 0.0)
        } else {
            Complex64::new(0.5 * m.cos, -0.5 * m.sin)
        }
    }

    /// All nonzero complex exponential coefficients, both `k` and `-k`.
    pub fn complex_terms(&self) -> Vec<(Frequency, Complex64)> {
        let mut out = Vec::with_capacity(2 * self.modes.len());
        for (k, m) in &self.modes {
            if k.is_zero() {
                out.push((k.clone(), Complex64::new(m.cos, 0.0)));
            } else {
                let c = Complex64::new(0.5 * m.cos, -0.5 * m.sin);
                out.push((k.neg(), c.conj()));
                out.push((k.clone(), c));
            }
        }
        out
    }

    /// Inverse of [`complex_terms`](Self::complex_terms): reads the canonical
    /// entries of a Hermitian coefficient table.
    pub(crate) fn from_canonical_complex(dim: usize, table: impl IntoIterator<Item = (Frequency, Complex64)>) -> Self {
        let mut modes = BTreeMap::new();
        for (k, c) in table {
            debug_assert!(k.is_canonical());
            let m = if k.is_zero() {
                Mode { cos: c.re, sin: 0.0 }
            } else {
                Mode {
                    cos: 2.0 * c.re,
                    sin: -2.0 * c.im,
                }
            };
            modes.insert(k, m);
        }
        TrigField { dim, modes }.pruned()
    }

    /// `||u||_s = (sum_k (1+|k|^2)^s |u_k|^2)^(1/2)` over complex exponential
    /// coefficients.
    pub fn sobolev_norm(&self, s: SobolevIndex) -> f64 {
        self.modes
            .iter()
            .map(|(k, m)| {
                if k.is_zero() {
                    m.cos * m.cos
                } else {
                    sobolev_weight(k.norm_sq(), s) * 0.5 * (m.cos * m.cos + m.sin * m.sin)
                }
            })
            .fold(0.0, |acc, x| acc + x)
            .sqrt()
    }

    fn check_dim(&self, other: &TrigField) -> Result<(), SpectralError> {
        if self.dim != other.dim {
            Err(SpectralError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            })
        } else {
            Ok(())
        }
    }

    /// `alpha * x + self`.
    pub fn axpy(&self, alpha: f64, x: &TrigField) -> Result<TrigField, SpectralError> {
        self.check_dim(x)?;
        let mut out = self.modes.clone();
        for (k, m) in &x.modes {
            let e = out.entry(k.clone()).or_default();
            e.cos += alpha * m.cos;
            e.sin += alpha * m.sin;
        }
        Ok(TrigField {
            dim: self.dim,
            modes: out,
        }
        .pruned())
    }

    pub fn try_add(&self, other: &TrigField) -> Result<TrigField, SpectralError> {
        self.axpy(1.0, other)
    }

    pub fn try_sub(&self, other: &TrigField) -> Result<TrigField, SpectralError> {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, alpha: f64) -> TrigField {
        TrigField {
            dim: self.dim,
            modes: self
                .modes
                .iter()
                .map(|(k, m)| {
                    (
                        k.clone(),
                        Mode {
                            cos: alpha * m.cos,
                            sin: alpha * m.sin,
                        },
                    )
                })
                .collect(),
        }
        .pruned()
    }

    /// Exact product. Sparse operands are convolved directly; when the number
    /// of coefficient pairs exceeds [`EXACT_PAIR_LIMIT`] the product is formed
    /// on an alias-free grid instead.
    pub fn multiply(&self, other: &TrigField) -> Result<TrigField, SpectralError> {
        self.check_dim(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(TrigField::zero(self.dim));
        }
        // Fixed operand order makes the floating-point accumulation, and hence
        // the result, exactly symmetric.
        let (lhs, rhs) = if operand_order(self, other).is_le() {
            (self, other)
        } else {
            (other, self)
        };
        let pairs = (2 * lhs.len()).saturating_mul(2 * rhs.len());
        if pairs > EXACT_PAIR_LIMIT {
            return Ok(lhs.multiply_on_grid(rhs));
        }
        let a = lhs.complex_terms();
        let b = rhs.complex_terms();
        let mut acc: HashMap<Frequency, Complex64> = HashMap::new();
        for (ka, ca) in &a {
            for (kb, cb) in &b {
                let k = ka.add(kb);
                if k.is_canonical() {
                    *acc.entry(k).or_default() += ca * cb;
                }
            }
        }
        Ok(Self::from_canonical_complex(self.dim, acc))
    }

    fn multiply_on_grid(&self, other: &TrigField) -> TrigField {
        let band = (self.max_frequency() + other.max_frequency()) as usize;
        let grid = GridTransform::new(self.dim, 2 * band + 1);
        let mut a = self.to_grid_samples(&grid);
        let b = other.to_grid_samples(&grid);
        for (x, y) in a.iter_mut().zip(&b) {
            *x = Complex64::new(x.re * y.re, 0.0);
        }
        grid.to_spectral(&mut a);
        Self::from_spectral_array(&grid, &a, band as i64)
    }

    #[cfg(test)]
    pub(crate) fn multiply_on_grid_for_test(&self, other: &TrigField) -> TrigField {
        self.multiply_on_grid(other)
    }

    /// Exact `p`-fold product (`p = 0` gives the constant 1).
    pub fn power(&self, p: u32) -> TrigField {
        let mut result = TrigField::constant(self.dim, 1.0);
        let mut base = self.clone();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                result = result.multiply(&base).expect("same dimension");
            }
            e >>= 1;
            if e > 0 {
                base = base.multiply(&base).expect("same dimension");
            }
        }
        result
    }

    /// Multiplies mode `k` by `-|k|^2`.
    pub fn laplacian(&self) -> TrigField {
        TrigField {
            dim: self.dim,
            modes: self
                .modes
                .iter()
                .map(|(k, m)| {
                    let w = -(k.norm_sq() as f64);
                    (
                        k.clone(),
                        Mode {
                            cos: w * m.cos,
                            sin: w * m.sin,
                        },
                    )
                })
                .collect(),
        }
        .pruned()
    }

    /// Keeps only modes with `|k|_inf <= cutoff`.
    pub fn project_box(&self, cutoff: i64) -> TrigField {
        self.retain_modes(|k| k.max_abs() <= cutoff)
    }

    /// Keeps only modes whose canonical frequency satisfies `keep`.
    pub fn retain_modes(&self, keep: impl Fn(&Frequency) -> bool) -> TrigField {
        TrigField {
            dim: self.dim,
            modes: self
                .modes
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, m)| (k.clone(), *m))
                .collect(),
        }
    }

    /// Whether every mode lies within `|k|_inf <= cutoff`.
    pub fn fits_box(&self, cutoff: i64) -> bool {
        self.max_frequency() <= cutoff
    }

    /// Pseudo-spectral evaluation of `phi(u)`: samples `u` on a grid of
    /// `oversample * (2 cutoff + 1)` points per axis, applies `phi`, and keeps
    /// the modes with `|k|_inf <= cutoff`.
    pub fn grid_apply(
        &self,
        phi: &ScalarFunction,
        oversample: usize,
        cutoff: usize,
    ) -> Result<TrigField, SpectralError> {
        if oversample < 2 {
            return Err(SpectralError::InvalidParameter(format!(
                "oversample must be at least 2, got {oversample}"
            )));
        }
        if cutoff == 0 {
            return Err(SpectralError::InvalidParameter("cutoff must be positive".into()));
        }
        let grid = GridTransform::new(self.dim, oversample * (2 * cutoff + 1));
        let mut samples = self.to_grid_samples(&grid);
        for z in samples.iter_mut() {
            *z = Complex64::new(phi.eval(z.re), 0.0);
        }
        grid.to_spectral(&mut samples);
        Ok(Self::from_spectral_array(&grid, &samples, cutoff as i64))
    }

    /// Exact samples of `u` on `grid` (modes beyond the grid band alias
    /// consistently because `exp(i<x_j,k>)` is periodic in `k` on the grid).
    pub(crate) fn to_grid_samples(&self, grid: &GridTransform) -> Vec<Complex64> {
        let mut data = vec![Complex64::new(0.0, 0.0); grid.len()];
        self.write_spectral_array(grid, &mut data);
        grid.to_physical(&mut data);
        data
    }

    /// Adds the complex coefficients of `self` into an FFT-ordered array.
    pub(crate) fn write_spectral_array(&self, grid: &GridTransform, data: &mut [Complex64]) {
        for (k, c) in self.complex_terms() {
            data[grid.index_of(&k)] += c;
        }
    }

    /// Reads the modes `|k|_inf <= cutoff` from an FFT-ordered spectral array.
    pub(crate) fn from_spectral_array(grid: &GridTransform, data: &[Complex64], cutoff: i64) -> TrigField {
        let dim = grid.dim();
        let cutoff = cutoff.min((grid.points() as i64 - 1) / 2);
        let table = box_frequencies(dim, cutoff)
            .into_iter()
            .filter(|k| k.is_canonical())
            .map(|k| {
                let c = data[grid.index_of(&k)];
                (k, c)
            });
        Self::from_canonical_complex(dim, table)
    }
}

fn operand_order(a: &TrigField, b: &TrigField) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        for ((ka, ma), (kb, mb)) in a.modes.iter().zip(&b.modes) {
            let ord = ka
                .cmp(kb)
                .then(ma.cos.total_cmp(&mb.cos))
                .then(ma.sin.total_cmp(&mb.sin));
            if ord.is_ne() {
                return ord;
            }
        }
        std::cmp::Ordering::Equal
    })
}

/// `(1 + |k|^2)^s`.
#[inline]
pub fn sobolev_weight(norm_sq: i64, s: SobolevIndex) -> f64 {
    (1.0 + norm_sq as f64).powf(s.value())
}

/// All `k` with `|k|_inf <= cutoff`, in lexicographic order.
pub fn box_frequencies(dim: usize, cutoff: i64) -> Vec<Frequency> {
    let mut out = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(out.len() * (2 * cutoff as usize + 1));
        for prefix in &out {
            for c in -cutoff..=cutoff {
                let mut v: Vec<i64> = prefix.clone();
                v.push(c);
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter().map(Frequency::new).collect()
}

impl Add for &TrigField {
    type Output = TrigField;
    fn add(self, rhs: &TrigField) -> TrigField {
        self.try_add(rhs).expect("field dimension mismatch")
    }
}

impl Sub for &TrigField {
    type Output = TrigField;
    fn sub(self, rhs: &TrigField) -> TrigField {
        self.try_sub(rhs).expect("field dimension mismatch")
    }
}

impl Neg for &TrigField {
    type Output = TrigField;
    fn neg(self) -> TrigField {
        self.scale(-1.0)
    }
}

impl Mul<&TrigField> for f64 {
    type Output = TrigField;
    fn mul(self, rhs: &TrigField) -> TrigField {
        rhs.scale(self)
    }
}

#[derive(Serialize, Deserialize)]
struct RawMode {
    k: Vec<i64>,
    #[serde(default)]
    cos: f64,
    #[serde(default)]
    sin: f64,
}

#[derive(Serialize, Deserialize)]
struct RawField {
    dim: usize,
    modes: Vec<RawMode>,
}

impl From<TrigField> for RawField {
    fn from(f: TrigField) -> Self {
        RawField {
            dim: f.dim,
            modes: f
                .modes
                .into_iter()
                .map(|(k, m)| RawMode {
                    k: k.components().to_vec(),
                    cos: m.cos,
                    sin: m.sin,
                })
                .collect(),
        }
    }
}

impl TryFrom<RawField> for TrigField {
    type Error = SpectralError;

    fn try_from(raw: RawField) -> Result<Self, Self::Error> {
        if raw.dim == 0 {
            return Err(SpectralError::InvalidParameter("dim must be at least 1".into()));
        }
        let mut modes = BTreeMap::new();
        for m in raw.modes {
            let k = Frequency::new(m.k);
            if k.dim() != raw.dim {
                return Err(SpectralError::DimensionMismatch {
                    left: raw.dim,
                    right: k.dim(),
                });
            }
            if !k.is_canonical() {
                return Err(SpectralError::NonCanonicalKey(k.to_string()));
            }
            if k.is_zero() && m.sin != 0.0 {
                return Err(SpectralError::InvalidParameter(
                    "zero frequency cannot carry a sine coefficient".into(),
                ));
            }
            if !m.cos.is_finite() || !m.sin.is_finite() {
                return Err(SpectralError::InvalidParameter(format!(
                    "non-finite coefficient at {k}"
                )));
            }
            if m.cos == 0.0 && m.sin == 0.0 {
                continue;
            }
            if modes.insert(k.clone(), Mode { cos: m.cos, sin: m.sin }).is_some() {
                return Err(SpectralError::InvalidParameter(format!("duplicate mode {k}")));
            }
        }
        Ok(TrigField { dim: raw.dim, modes })
    }
}
