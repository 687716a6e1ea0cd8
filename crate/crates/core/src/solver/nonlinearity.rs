use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::spectral::{horner, ScalarFunction, SobolevIndex};

/// `f(y) = P(y) + g(y)` with `P` a polynomial of degree `p >= 2` and `g`
/// a bounded entry of the perturbation catalog.
///
/// [`linear`](Self::linear) builds `f = 0` for checks against the heat
/// equation; it has degree 0 and cannot be used for planning. In JSON it is
/// written as an empty coefficient list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNonlinearity", into = "RawNonlinearity")]
pub struct NonlinearitySpec {
    poly: Vec<f64>,
    g_id: String,
    g: ScalarFunction,
}

#[derive(Serialize, Deserialize)]
struct RawNonlinearity {
    /// Coefficients `c_0, ..., c_p` in increasing degree.
    poly: Vec<f64>,
    #[serde(default = "zero_id")]
    g: String,
}

fn zero_id() -> String {
    "zero".into()
}

impl NonlinearitySpec {
    pub fn new(poly: Vec<f64>, g_id: &str) -> Result<Self, SolverError> {
        if poly.is_empty() && ScalarFunction::from_id(g_id)?.is_zero() {
            return Ok(Self::linear());
        }
        if poly.len() < 3 {
            return Err(SolverError::Config(format!(
                "polynomial degree must be at least 2, got {} coefficients",
                poly.len()
            )));
        }
        if poly.iter().any(|c| !c.is_finite()) {
            return Err(SolverError::Config("non-finite polynomial coefficient".into()));
        }
        if *poly.last().unwrap() == 0.0 {
            return Err(SolverError::Config("leading coefficient must be nonzero".into()));
        }
        let g = ScalarFunction::from_id(g_id)?;
        if !g.is_bounded_catalog_entry() {
            return Err(SolverError::Config(format!("`{g_id}` is not a bounded catalog function")));
        }
        Ok(NonlinearitySpec {
            poly,
            g_id: g_id.trim().to_string(),
            g,
        })
    }

    /// `f = 0`.
    pub fn linear() -> Self {
        NonlinearitySpec {
            poly: Vec::new(),
            g_id: zero_id(),
            g: ScalarFunction::Zero,
        }
    }

    pub fn is_linear(&self) -> bool {
        self.poly.is_empty()
    }

    /// `f(y) = c y^p`.
    pub fn monomial(p: u32, c: f64) -> Result<Self, SolverError> {
        let mut poly = vec![0.0; p as usize + 1];
        poly[p as usize] = c;
        Self::new(poly, "zero")
    }

    pub fn with_perturbation(&self, g_id: &str) -> Result<Self, SolverError> {
        Self::new(self.poly.clone(), g_id)
    }

    /// `p`, or 0 for the linear case.
    pub fn degree(&self) -> u32 {
        self.poly.len().saturating_sub(1) as u32
    }

    /// `c = c_p`, or 0 for the linear case.
    pub fn leading(&self) -> f64 {
        self.poly.last().copied().unwrap_or(0.0)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.poly
    }

    pub fn perturbation(&self) -> &ScalarFunction {
        &self.g
    }

    pub fn perturbation_id(&self) -> &str {
        &self.g_id
    }

    /// Copy with every coefficient and the perturbation negated.
    pub fn negated(&self) -> Self {
        NonlinearitySpec {
            poly: self.poly.iter().map(|c| -c).collect(),
            g_id: format!("-1*{}", self.g_id),
            g: ScalarFunction::Scaled {
                amplitude: -1.0,
                base: Box::new(self.g.clone()),
            },
        }
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        let base = horner(&self.poly, y);
        match self.g {
            ScalarFunction::Zero => base,
            ref g => base + g.eval(y),
        }
    }

    /// Warning text when a nonzero perturbation is combined with `p <= s`,
    /// a regime outside the controllability theory.
    pub fn regime_warning(&self, s: SobolevIndex) -> Option<String> {
        (!self.g.is_zero() && f64::from(self.degree()) <= s.value()).then(|| {
            format!(
                "perturbation `{}` with degree {} <= s = {}: controllability is not guaranteed",
                self.g_id,
                self.degree(),
                s.value()
            )
        })
    }
}

impl TryFrom<RawNonlinearity> for NonlinearitySpec {
    type Error = SolverError;

    fn try_from(raw: RawNonlinearity) -> Result<Self, Self::Error> {
        NonlinearitySpec::new(raw.poly, &raw.g)
    }
}

impl From<NonlinearitySpec> for RawNonlinearity {
    fn from(nl: NonlinearitySpec) -> Self {
        RawNonlinearity {
            poly: nl.poly,
            g: nl.g_id,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(NonlinearitySpec::new(vec![0.0, 1.0], "zero").is_err());
        assert!(NonlinearitySpec::new(vec![0.0, 0.0, 0.0], "zero").is_err());
        assert!(NonlinearitySpec::new(vec![0.0, 0.0, 1.0], "cube").is_err());
        assert!(NonlinearitySpec::new(vec![0.0, 0.0, 1.0], "erf").is_err());
        assert!(NonlinearitySpec::new(vec![], "tanh").is_err());
        let lin = NonlinearitySpec::new(vec![], "zero").unwrap();
        assert!(lin.is_linear() && lin.eval(3.0) == 0.0 && lin.degree() == 0);
        let nl = NonlinearitySpec::new(vec![0.0, 1.0, 0.0, 2.0], "0.5*tanh").unwrap();
        assert_eq!(nl.degree(), 3);
        assert_eq!(nl.leading(), 2.0);
        let y: f64 = 0.3;
        assert!((nl.eval(y) - (y + 2.0 * y.powi(3) + 0.5 * y.tanh())).abs() < 1e-15);
    }

    #[test]
    fn regime_warning_when_degree_not_above_s() {
        let nl = NonlinearitySpec::new(vec![0.0, 0.0, 1.0], "tanh").unwrap();
        assert!(nl.regime_warning(SobolevIndex::new(2.0).unwrap()).is_some());
        assert!(nl.regime_warning(SobolevIndex::new(1.0).unwrap()).is_none());
        let plain = NonlinearitySpec::monomial(2, 1.0).unwrap();
        assert!(plain.regime_warning(SobolevIndex::new(3.0).unwrap()).is_none());
    }

    #[test]
    fn json_roundtrip() {
        let nl = NonlinearitySpec::new(vec![0.0, 0.0, 0.0, 1.0], "tanh").unwrap();
        let text = serde_json::to_string(&nl).unwrap();
        assert_eq!(text, r#"{"poly":[0.0,0.0,0.0,1.0],"g":"tanh"}"#);
        assert_eq!(serde_json::from_str::<NonlinearitySpec>(&text).unwrap(), nl);
        let plain: NonlinearitySpec = serde_json::from_str(r#"{"poly":[0,0,1]}"#).unwrap();
        assert_eq!(plain.perturbation_id(), "zero");
    }

    #[test]
    fn negation_flips_values() {
        let nl = NonlinearitySpec::new(vec![0.0, 1.0, 0.0, 1.0], "tanh").unwrap();
        let neg = nl.negated();
        assert_eq!(neg.eval(0.7), -nl.eval(0.7));
    }
}
