use serde::{Deserialize, Serialize};
use std::fmt;

/// A lattice point of `Z^d`, used as a Fourier wave vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Frequency(Vec<i64>);

impl Frequency {
    pub fn new(components: Vec<i64>) -> Self {
        Frequency(components)
    }

    pub fn zero(dim: usize) -> Self {
        Frequency(vec![0; dim])
    }

    /// The `i`-th standard basis vector `e_i` in `Z^dim`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = vec![0; dim];
        v[i] = 1;
        Frequency(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Squared Euclidean length `|k|^2`.
    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|c| c * c).sum()
    }

    /// `|k|_inf`.
    pub fn max_abs(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn neg(&self) -> Frequency {
        Frequency(self.0.iter().map(|c| -c).collect())
    }

    pub fn add(&self, other: &Frequency) -> Frequency {
        debug_assert_eq!(self.dim(), other.dim());
        Frequency(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Frequency) -> Frequency {
        debug_assert_eq!(self.dim(), other.dim());
        Frequency(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, factor: i64) -> Frequency {
        Frequency(self.0.iter().map(|c| c * factor).collect())
    }

    /// `<x, k>` for a point `x` of the torus.
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum()
    }

    /// Canonical representatives have their first nonzero component positive;
    /// the zero vector represents itself.
    pub fn is_canonical(&self) -> bool {
        match self.0.iter().find(|&&c| c != 0) {
            Some(&c) => c > 0,
            None => true,
        }
    }

    /// Returns the canonical member of `{k, -k}` and whether a sign flip was needed.
    pub fn canonical(&self) -> (Frequency, bool) {
        if self.is_canonical() {
            (self.clone(), false)
        } else {
            (self.neg(), true)
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i64>> for Frequency {
    fn from(v: Vec<i64>) -> Self {
        Frequency(v)
    }
}

impl<const N: usize> From<[i64; N]> for Frequency {
    fn from(v: [i64; N]) -> Self {
        Frequency(v.to_vec())
    }
}

/// Cosine or sine component of a mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Cos,
    Sin,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_representative() {
        assert!(Frequency::from([0, 0]).is_canonical());
        assert!(Frequency::from([0, 3]).is_canonical());
        assert!(!Frequency::from([0, -3]).is_canonical());
        assert!(!Frequency::from([-1, 5]).is_canonical());
        let (c, flipped) = Frequency::from([-1, 5]).canonical();
        assert_eq!(c, Frequency::from([1, -5]));
        assert!(flipped);
    }

    #[test]
    fn arithmetic() {
        let a = Frequency::from([1, -2]);
        let b = Frequency::from([3, 4]);
        assert_eq!(a.add(&b), Frequency::from([4, 2]));
        assert_eq!(a.sub(&b), Frequency::from([-2, -6]));
        assert_eq!(a.norm_sq(), 5);
        assert_eq!(b.max_abs(), 4);
        assert_eq!(a.to_string(), "(1,-2)");
    }
}
