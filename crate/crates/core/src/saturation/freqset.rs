use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::SaturationError;
use crate::spectral::{Frequency, TrigField};

/// A finite set of lattice vectors in `Z^d`, the index set of a control space
/// `span{cos<x,k>, sin<x,k> : k in I}`.
///
/// Construction only checks dimensions; [`validate`](Self::validate) checks
/// the symmetric-with-origin requirement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct FrequencySet {
    dim: usize,
    elems: BTreeSet<Frequency>,
}

impl FrequencySet {
    pub fn new(dim: usize, elems: impl IntoIterator<Item = Frequency>) -> Result<Self, SaturationError> {
        if dim == 0 {
            return Err(SaturationError::EmptyDimension);
        }
        let mut set = BTreeSet::new();
        for k in elems {
            if k.dim() != dim {
                return Err(SaturationError::DimensionMismatch {
                    expected: dim,
                    found: k.dim(),
                });
            }
            set.insert(k);
        }
        Ok(FrequencySet { dim, elems: set })
    }

    /// Builds a set from `vectors` together with their negatives and the origin.
    pub fn symmetric(dim: usize, vectors: impl IntoIterator<Item = Frequency>) -> Result<Self, SaturationError> {
        let mut all = vec![Frequency::zero(dim)];
        for k in vectors {
            all.push(k.neg());
            all.push(k);
        }
        Self::new(dim, all)
    }

    /// `{0, +-e_1, ..., +-e_d}`.
    pub fn cross(dim: usize) -> Self {
        Self::symmetric(dim, (0..dim).map(|i| Frequency::unit(dim, i))).expect("consistent dimension")
    }

    /// All `k` with `|k|_inf <= radius`.
    pub fn full_box(dim: usize, radius: i64) -> Self {
        Self::new(dim, crate::spectral::box_frequencies(dim, radius)).expect("consistent dimension")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, k: &Frequency) -> bool {
        self.elems.contains(k)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Frequency> {
        self.elems.iter()
    }

    pub fn is_subset(&self, other: &FrequencySet) -> bool {
        self.elems.is_subset(&other.elems)
    }

    /// `max |k|_inf` over the elements.
    pub fn radius(&self) -> i64 {
        self.elems.iter().map(Frequency::max_abs).max().unwrap_or(0)
    }

    /// Whether every `k` with `|k|_inf <= radius` belongs to the set.
    pub fn covers_box(&self, radius: i64) -> bool {
        crate::spectral::box_frequencies(self.dim, radius)
            .iter()
            .all(|k| self.contains(k))
    }

    /// One representative of each `{k, -k}` pair with `k != 0`.
    pub fn canonical_nonzero(&self) -> Vec<Frequency> {
        self.elems
            .iter()
            .filter(|k| !k.is_zero() && k.is_canonical())
            .cloned()
            .collect()
    }

    pub fn validate(&self) -> Result<(), SaturationError> {
        if !self.contains(&Frequency::zero(self.dim)) {
            return Err(SaturationError::MissingOrigin);
        }
        if let Some(k) = self.elems.iter().find(|k| !self.contains(&k.neg())) {
            return Err(SaturationError::NotSymmetric(k.clone()));
        }
        Ok(())
    }

    /// Whether every mode of `field` has its frequency in the set.
    pub fn supports(&self, field: &TrigField) -> bool {
        field.support().all(|k| self.contains(k))
    }

    /// Restriction of `field` to the modes in the set.
    pub fn project(&self, field: &TrigField) -> TrigField {
        field.retain_modes(|k| self.contains(k))
    }
}

impl TryFrom<Vec<Vec<i64>>> for FrequencySet {
    type Error = SaturationError;

    fn try_from(raw: Vec<Vec<i64>>) -> Result<Self, Self::Error> {
        let dim = raw.first().map(Vec::len).ok_or(SaturationError::EmptyDimension)?;
        FrequencySet::new(dim, raw.into_iter().map(Frequency::new))
    }
}

impl From<FrequencySet> for Vec<Vec<i64>> {
    fn from(set: FrequencySet) -> Self {
        set.elems.into_iter().map(|k| k.components().to_vec()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set1(v: &[i64]) -> FrequencySet {
        FrequencySet::new(1, v.iter().map(|&c| Frequency::from([c]))).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert_eq!(set1(&[0, 1, -1]).validate(), Ok(()));
        assert_eq!(
            set1(&[0, 1]).validate(),
            Err(SaturationError::NotSymmetric(Frequency::from([1])))
        );
        assert_eq!(set1(&[1, -1]).validate(), Err(SaturationError::MissingOrigin));
    }

    #[test]
    fn json_is_array_of_vectors() {
        let s = FrequencySet::cross(2);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, "[[-1,0],[0,-1],[0,0],[0,1],[1,0]]");
        let back: FrequencySet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<FrequencySet>("[[0,0],[1]]").is_err());
        assert!(serde_json::from_str::<FrequencySet>("[]").is_err());
    }

    #[test]
    fn box_cover() {
        assert!(FrequencySet::full_box(2, 2).covers_box(2));
        assert!(!FrequencySet::cross(2).covers_box(1));
        assert!(FrequencySet::cross(2).covers_box(0));
    }
}
