use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Pointwise scalar maps that can be pushed through a field on a grid.
///
/// The bounded entries (`Zero`, `Sin`, `Tanh`, `Gaussian`, and their
/// `Scaled` forms) make up the perturbation catalog:
///
/// | id         | map              | sup norm | derivative bound |
/// |------------|------------------|----------|------------------|
/// | `zero`     | `0`              | 0        | 0                |
/// | `sin`      | `sin y`          | 1        | 1 (all orders)   |
/// | `tanh`     | `tanh y`         | 1        | 1 (first order)  |
/// | `gaussian` | `exp(-y^2)`      | 1        | `sqrt(2/e)` (first order) |
///
/// `Scaled` multiplies every bound by `|amplitude|`. `Polynomial` and `Sum`
/// exist for testing the grid machinery and are not part of the catalog.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarFunction {
    Zero,
    Sin,
    Tanh,
    Gaussian,
    Constant(f64),
    /// Coefficients in increasing degree.
    Polynomial(Vec<f64>),
    Scaled {
        amplitude: f64,
        base: Box<ScalarFunction>,
    },
    Sum(Vec<ScalarFunction>),
}

impl ScalarFunction {
    /// Parses a function id such as `tanh`, `gaussian`, `0.5*sin`,
    /// `sin_plus_one`, `square` or `cube`.
    pub fn from_id(id: &str) -> Result<Self, SpectralError> {
        let id = id.trim();
        if let Some((amp, rest)) = id.split_once('*') {
            let amplitude: f64 = amp
                .trim()
                .parse()
                .map_err(|_| SpectralError::UnknownFunction(id.to_string()))?;
            return Ok(ScalarFunction::Scaled {
                amplitude,
                base: Box::new(Self::from_id(rest)?),
            });
        }
        Ok(match id {
            "zero" => ScalarFunction::Zero,
            "sin" => ScalarFunction::Sin,
            "tanh" => ScalarFunction::Tanh,
            "gaussian" => ScalarFunction::Gaussian,
            "sin_plus_one" => {
                ScalarFunction::Sum(vec![ScalarFunction::Sin, ScalarFunction::Constant(1.0)])
            }
            "square" => ScalarFunction::Polynomial(vec![0.0, 0.0, 1.0]),
            "cube" => ScalarFunction::Polynomial(vec![0.0, 0.0, 0.0, 1.0]),
            _ => return Err(SpectralError::UnknownFunction(id.to_string())),
        })
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            ScalarFunction::Zero => 0.0,
            ScalarFunction::Sin => y.sin(),
            ScalarFunction::Tanh => y.tanh(),
            ScalarFunction::Gaussian => (-y * y).exp(),
            ScalarFunction::Constant(c) => *c,
            ScalarFunction::Polynomial(c) => horner(c, y),
            ScalarFunction::Scaled { amplitude, base } => amplitude * base.eval(y),
            ScalarFunction::Sum(parts) => parts.iter().map(|p| p.eval(y)).sum(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ScalarFunction::Zero => true,
            ScalarFunction::Constant(c) => *c == 0.0,
            ScalarFunction::Polynomial(c) => c.iter().all(|&x| x == 0.0),
            ScalarFunction::Scaled { amplitude, base } => *amplitude == 0.0 || base.is_zero(),
            ScalarFunction::Sum(parts) => parts.iter().all(|p| p.is_zero()),
            _ => false,
        }
    }

    /// Whether the map is one of the bounded catalog entries.
    pub fn is_bounded_catalog_entry(&self) -> bool {
        match self {
            ScalarFunction::Zero
            | ScalarFunction::Sin
            | ScalarFunction::Tanh
            | ScalarFunction::Gaussian => true,
            ScalarFunction::Scaled { amplitude, base } => {
                amplitude.is_finite() && base.is_bounded_catalog_entry()
            }
            _ => false,
        }
    }
}

#[inline]
pub(crate) fn horner(coeffs: &[f64], y: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_ids() {
        assert_eq!(ScalarFunction::from_id("tanh").unwrap(), ScalarFunction::Tanh);
        let f = ScalarFunction::from_id("0.5*sin").unwrap();
        assert!((f.eval(1.0) - 0.5 * 1.0f64.sin()).abs() < 1e-15);
        assert!(f.is_bounded_catalog_entry());
        assert!(!ScalarFunction::from_id("square").unwrap().is_bounded_catalog_entry());
        assert!(matches!(
            ScalarFunction::from_id("erf"),
            Err(SpectralError::UnknownFunction(_))
        ));
    }

    #[test]
    fn horner_matches_direct() {
        let c = [1.0, -2.0, 0.5, 3.0];
        let y = 0.7;
        let direct = 1.0 - 2.0 * y + 0.5 * y * y + 3.0 * y * y * y;
        assert!((horner(&c, y) - direct).abs() < 1e-14);
    }
}
