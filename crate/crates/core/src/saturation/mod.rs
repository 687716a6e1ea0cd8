//! Frequency-lattice algebra for control spaces spanned by trigonometric modes.
//!
//! A symmetric set `I ⊆ Z^d` containing the origin defines the control span
//! `H(I)`. Growth steps add the frequencies `l ± m` (or `p`-fold sums for odd
//! `p`) reachable through the nonlinearity, and [`saturate`] iterates them
//! inside a finite box. The set saturates exactly when its integer
//! combinations exhaust `Z^d`, which [`is_generator`] and [`gcd_determinant`]
//! decide independently.

mod freqset;
mod growth;
mod lattice;
mod recipe;

pub use freqset::FrequencySet;
pub use growth::{grow_once, saturate, saturate_with, working_radius, GrowthMode, SaturationTrace};
pub use lattice::{gcd_determinant, is_generator, lattice_span, LatticeBasis, MAX_DETERMINANT_TUPLES};
pub use recipe::{decompose_mode, decompose_product, decompose_within, DecompositionRecipe, RecipeBranch, RecipeStep};

use crate::spectral::Frequency;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SaturationError {
    #[error("frequency set is empty or zero-dimensional")]
    EmptyDimension,
    #[error("expected frequencies of dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("set is not symmetric: contains {0} but not its negative")]
    NotSymmetric(Frequency),
    #[error("set does not contain the origin")]
    MissingOrigin,
    #[error("degree must be at least 2, got {0}")]
    InvalidDegree(u32),
    #[error("full p-fold growth requires odd p, got {0}")]
    EvenDegreeFullProduct(u32),
    #[error("box cutoff must be nonnegative, got {0}")]
    InvalidCutoff(i64),
    #[error("{0} determinant tuples exceed the enumeration cap")]
    TooManyTuples(u128),
    #[error("target frequency {target} is not reachable in one growth step")]
    Unreachable { target: Frequency },
    #[error("recipe residual {residual:e} exceeds a tenth of the budget {budget:e}")]
    ResidualTooLarge { residual: f64, budget: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn symmetric_set(dim: usize, raw: &[Vec<i64>]) -> FrequencySet {
        FrequencySet::symmetric(dim, raw.iter().map(|v| Frequency::new(v.clone()))).unwrap()
    }

    fn vectors(dim: usize, range: i64, max: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
        prop::collection::vec(prop::collection::vec(-range..=range, dim), 0..=max)
    }

    #[test]
    fn gcd_matches_generator_exhaustively_in_one_and_two_dimensions() {
        // All symmetric sets generated by up to two vectors with entries in [-3, 3].
        for dim in 1..=2usize {
            let all: Vec<Vec<i64>> = crate::spectral::box_frequencies(dim, 3)
                .into_iter()
                .filter(|k| !k.is_zero() && k.is_canonical())
                .map(|k| k.components().to_vec())
                .collect();
            for i in 0..all.len() {
                for j in i..all.len() {
                    let set = symmetric_set(dim, &[all[i].clone(), all[j].clone()]);
                    let g = gcd_determinant(&set).unwrap();
                    assert_eq!(g == 1, is_generator(&set), "{:?}", set);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn gcd_one_iff_generator(dim in 1usize..=3, raw in vectors(3, 3, 4)) {
            let raw: Vec<Vec<i64>> = raw.into_iter().map(|v| v[..dim].to_vec()).collect();
            let set = symmetric_set(dim, &raw);
            prop_assert_eq!(gcd_determinant(&set).unwrap() == 1, is_generator(&set));
        }

        #[test]
        fn span_index_matches_gcd(raw in vectors(2, 3, 4)) {
            let set = symmetric_set(2, &raw);
            let basis = lattice_span(&set);
            prop_assert_eq!(basis.index().unwrap_or(0), gcd_determinant(&set).unwrap());
            for k in set.iter() {
                prop_assert!(basis.contains(k));
            }
        }

        #[test]
        fn saturation_covers_iff_generator(raw in vectors(2, 3, 3), cutoff in 0i64..=5, p in 2u32..=3) {
            let set = symmetric_set(2, &raw);
            let trace = saturate(&set, p, cutoff, 64).unwrap();
            let expected = cutoff == 0 || is_generator(&set);
            prop_assert_eq!(trace.covered, expected);
        }

        #[test]
        fn growth_is_symmetric_and_monotone(raw in vectors(2, 2, 3), extra in vectors(2, 2, 2), p in 2u32..=5) {
            let small = symmetric_set(2, &raw);
            let mut all = raw.clone();
            all.extend(extra);
            let big = symmetric_set(2, &all);
            let gs = grow_once(&small, p, GrowthMode::Pairwise).unwrap();
            let gb = grow_once(&big, p, GrowthMode::Pairwise).unwrap();
            prop_assert!(gs.validate().is_ok());
            prop_assert!(small.is_subset(&gs));
            prop_assert!(gs.is_subset(&gb));
            if p % 2 == 1 {
                let full = grow_once(&small, p, GrowthMode::FullP).unwrap();
                prop_assert!(full.validate().is_ok());
                prop_assert!(gs.is_subset(&full));
            }
        }

        #[test]
        fn trace_levels_are_nested(raw in vectors(2, 2, 3), p in 2u32..=4) {
            let set = symmetric_set(2, &raw);
            let trace = saturate(&set, p, 3, 20).unwrap();
            for w in trace.levels.windows(2) {
                prop_assert!(w[0].is_subset(&w[1]));
                prop_assert!(w[1].validate().is_ok());
            }
            prop_assert_eq!(trace.covered, trace.last().covers_box(3));
        }

        #[test]
        fn recipes_converge_at_documented_rate(cos in any::<bool>(), c in prop_oneof![Just(1.0), Just(-1.0)]) {
            let set = FrequencySet::symmetric(1, [Frequency::from([1])]).unwrap();
            let s = crate::spectral::SobolevIndex::new(1.0).unwrap();
            let phase = if cos { crate::spectral::Phase::Cos } else { crate::spectral::Phase::Sin };
            let target = Frequency::from([2]);
            let coarse = decompose_mode(&target, phase, &set, 4, c, 1e-1).unwrap();
            let fine = decompose_mode(&target, phase, &set, 4, c, 1e-2).unwrap();
            // Rate 2 for p = 4: a tenfold smaller eps shrinks the residual about a hundredfold.
            prop_assert!(fine.residual(s) < coarse.residual(s) / 30.0);
        }
    }
}
