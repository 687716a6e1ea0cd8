//! Real trigonometric polynomials on the torus `T^d = R^d / 2 pi Z^d`.
//!
//! Fields are stored sparsely by canonical wave vector. Norms follow the
//! complex exponential convention `u = sum_k u_k exp(i<x,k>)`,
//! `||u||_s^2 = sum_k (1+|k|^2)^s |u_k|^2`, so the constant function 1 has
//! norm 1 and `cos<x,k>` has `||.||_s^2 = (1+|k|^2)^s / 2`.

mod field;
mod frequency;
mod functions;
mod grid;

pub use field::{box_frequencies, sobolev_weight, Mode, TrigField, EXACT_PAIR_LIMIT, PRUNE_TOL};
pub use frequency::{Frequency, Phase};
pub use functions::ScalarFunction;
pub use grid::GridTransform;

pub(crate) use functions::horner;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("unknown scalar function id `{0}`")]
    UnknownFunction(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("frequency {0} is not a canonical representative")]
    NonCanonicalKey(String),
}

/// Regularity order `s >= 0` of the Sobolev space `H^s(T^d)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub fn new(s: f64) -> Result<Self, SpectralError> {
        if s.is_finite() && s >= 0.0 {
            Ok(SobolevIndex(s))
        } else {
            Err(SpectralError::InvalidParameter(format!(
                "Sobolev index must be finite and nonnegative, got {s}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `s > d/2`, the range in which `H^s(T^d)` is an algebra.
    pub fn is_algebra(self, dim: usize) -> bool {
        self.0 > dim as f64 / 2.0
    }

    pub fn shifted(self, ds: f64) -> SobolevIndex {
        SobolevIndex((self.0 + ds).max(0.0))
    }
}

impl TryFrom<f64> for SobolevIndex {
    type Error = SpectralError;
    fn try_from(s: f64) -> Result<Self, Self::Error> {
        SobolevIndex::new(s)
    }
}

impl From<SobolevIndex> for f64 {
    fn from(s: SobolevIndex) -> f64 {
        s.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn s(v: f64) -> SobolevIndex {
        SobolevIndex::new(v).unwrap()
    }

    fn assert_field_close(a: &TrigField, b: &TrigField, tol: f64) {
        let diff = a - b;
        assert!(
            diff.max_coefficient() <= tol,
            "fields differ by {} (> {tol}):\n{a:?}\n{b:?}",
            diff.max_coefficient()
        );
    }

    #[test]
    fn norm_examples() {
        assert_eq!(TrigField::constant(1, 1.0).sobolev_norm(s(3.0)), 1.0);
        let c = TrigField::cos([1, 0], 1.0);
        assert!((c.sobolev_norm(s(1.0)) - 1.0).abs() < 1e-15);
        let u = TrigField::sin([3], 1.0);
        assert!((u.sobolev_norm(s(2.0)) - 50f64.sqrt()).abs() < 1e-12);
        assert_eq!(TrigField::zero(2).sobolev_norm(s(1.0)), 0.0);
    }

    #[test]
    fn norm_matches_mean_square() {
        // ||u||_0^2 = (2 pi)^{-1} int |u|^2 by midpoint quadrature (exact for trig polys).
        let u = TrigField::from_terms(
            1,
            vec![
                (Frequency::from([0]), 0.3, 0.0),
                (Frequency::from([1]), 1.0, -0.5),
                (Frequency::from([4]), 0.0, 2.0),
            ],
        )
        .unwrap();
        let n = 64;
        let mean: f64 = (0..n)
            .map(|j| {
                let v = u.eval(&[2.0 * PI * j as f64 / n as f64]);
                v * v
            })
            .sum::<f64>()
            / n as f64;
        assert!((u.sobolev_norm(s(0.0)).powi(2) - mean).abs() < 1e-12);
    }

    #[test]
    fn product_to_sum_examples() {
        let c = TrigField::cos([1], 1.0);
        let sn = TrigField::sin([1], 1.0);
        let half = |f: TrigField| f.scale(0.5);
        assert_field_close(
            &c.multiply(&c).unwrap(),
            &(&TrigField::constant(1, 0.5) + &half(TrigField::cos([2], 1.0))),
            1e-15,
        );
        assert_field_close(&sn.multiply(&c).unwrap(), &half(TrigField::sin([2], 1.0)), 1e-15);
        let one_plus_c = &TrigField::constant(1, 1.0) + &c;
        assert_field_close(
            &one_plus_c.multiply(&sn).unwrap(),
            &(&sn + &half(TrigField::sin([2], 1.0))),
            1e-15,
        );
    }

    #[test]
    fn power_examples() {
        let c = TrigField::cos([1], 1.0);
        let cube = &TrigField::cos([1], 0.75) + &TrigField::cos([3], 0.25);
        assert_field_close(&c.power(3), &cube, 1e-15);
        assert_field_close(&TrigField::constant(2, 1.5).power(4), &TrigField::constant(2, 1.5f64.powi(4)), 1e-14);
        let one_plus_c = &TrigField::constant(1, 1.0) + &c;
        let expect = TrigField::from_terms(
            1,
            vec![
                (Frequency::from([0]), 1.5, 0.0),
                (Frequency::from([1]), 2.0, 0.0),
                (Frequency::from([2]), 0.5, 0.0),
            ],
        )
        .unwrap();
        assert_field_close(&one_plus_c.power(2), &expect, 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = TrigField::cos([1], 1.0);
        let b = TrigField::cos([1, 1], 1.0);
        assert!(matches!(a.multiply(&b), Err(SpectralError::DimensionMismatch { .. })));
        assert!(a.try_add(&b).is_err());
    }

    #[test]
    fn laplacian_and_projection() {
        assert_field_close(&TrigField::cos([2], 1.0).laplacian(), &TrigField::cos([2], -4.0), 0.0);
        assert!(TrigField::constant(1, 3.0).laplacian().is_zero());
        let u = &(&TrigField::constant(1, 1.0) + &TrigField::cos([1], 1.0)) + &TrigField::cos([5], 1.0);
        let p = u.project_box(2);
        assert_field_close(&p, &(&TrigField::constant(1, 1.0) + &TrigField::cos([1], 1.0)), 0.0);
    }

    #[test]
    fn grid_apply_examples() {
        let zero = TrigField::zero(1);
        assert!(zero.grid_apply(&ScalarFunction::Tanh, 2, 3).unwrap().is_zero());
        let one = zero
            .grid_apply(&ScalarFunction::from_id("sin_plus_one").unwrap(), 3, 2)
            .unwrap();
        assert_field_close(&one, &TrigField::constant(1, 1.0), 1e-15);
        let c = TrigField::cos([1], 1.0);
        let sq = c.grid_apply(&ScalarFunction::from_id("square").unwrap(), 4, 4).unwrap();
        assert_field_close(&sq, &c.multiply(&c).unwrap(), 1e-12);
        assert!(matches!(
            c.grid_apply(&ScalarFunction::Tanh, 1, 4),
            Err(SpectralError::InvalidParameter(_))
        ));
    }

    #[test]
    fn grid_apply_aliasing_shrinks_with_oversampling() {
        let u = &TrigField::cos([1], 1.2) + &TrigField::sin([2], 0.7);
        let reference = u.grid_apply(&ScalarFunction::Tanh, 64, 6).unwrap();
        let err = |os| (&u.grid_apply(&ScalarFunction::Tanh, os, 6).unwrap() - &reference).sobolev_norm(s(0.0));
        let (e2, e8) = (err(2), err(8));
        assert!(e8 < e2, "aliasing error did not decrease: {e2} -> {e8}");
    }

    #[test]
    fn grid_multiply_matches_exact() {
        let u = TrigField::from_terms(
            2,
            box_frequencies(2, 3).into_iter().map(|k| {
                let a = (k.components()[0] as f64 * 0.37).sin();
                let b = (k.components()[1] as f64 * 0.91 + 0.2).cos();
                (k, a, b)
            }),
        )
        .unwrap();
        let exact = u.multiply(&u).unwrap();
        let grid = u.multiply_on_grid_for_test(&u);
        assert_field_close(&exact, &grid, 1e-12);
    }

    #[test]
    fn json_layout() {
        let u = &TrigField::cos([1, -2], 0.25) + &TrigField::sin([0, 3], -1.5);
        let text = serde_json::to_string(&u).unwrap();
        assert_eq!(
            text,
            r#"{"dim":2,"modes":[{"k":[0,3],"cos":0.0,"sin":-1.5},{"k":[1,-2],"cos":0.25,"sin":0.0}]}"#
        );
        let bad = r#"{"dim":1,"modes":[{"k":[-1],"cos":1.0,"sin":0.0}]}"#;
        assert!(serde_json::from_str::<TrigField>(bad).is_err());
    }

    fn sparse_field(dim: usize, max_k: i64, max_terms: usize) -> impl Strategy<Value = TrigField> {
        prop::collection::vec(
            (prop::collection::vec(-max_k..=max_k, dim), -2.0f64..2.0, -2.0f64..2.0),
            0..=max_terms,
        )
        .prop_map(move |terms| {
            TrigField::from_terms(dim, terms.into_iter().map(|(k, a, b)| (Frequency::new(k), a, b))).unwrap()
        })
    }

    /// `sup_k (1+k^2) sum_j 1/((1+j^2)(1+(k-j)^2))` is `2 pi coth(pi)`, whose
    /// square root (2.5113) bounds `||uv||_1 / (||u||_1 ||v||_1)` in one dimension.
    const ALGEBRA_CONSTANT_D1_S1: f64 = 2.52;

    proptest! {
        #[test]
        fn cos_norm_formula(k in prop::collection::vec(-6i64..=6, 1..=3), sv in 0.0f64..3.0) {
            let k = Frequency::new(k);
            prop_assume!(!k.is_zero());
            let u = TrigField::cos(k.clone(), 1.0);
            let expect = (1.0 + k.norm_sq() as f64).powf(sv) / 2.0;
            let got = u.sobolev_norm(s(sv)).powi(2);
            prop_assert!((got - expect).abs() <= 1e-12 * expect);
        }

        #[test]
        fn multiply_commutes_and_bilinear(
            u in sparse_field(2, 3, 5), v in sparse_field(2, 3, 5), w in sparse_field(2, 3, 5),
            alpha in -2.0f64..2.0,
        ) {
            prop_assert_eq!(u.multiply(&v).unwrap(), v.multiply(&u).unwrap());
            let lhs = u.multiply(&(&v + &w.scale(alpha))).unwrap();
            let rhs = &u.multiply(&v).unwrap() + &u.multiply(&w).unwrap().scale(alpha);
            prop_assert!((&lhs - &rhs).max_coefficient() < 1e-12);
        }

        #[test]
        fn algebra_property_d1(u in sparse_field(1, 8, 6), v in sparse_field(1, 8, 6)) {
            let s1 = s(1.0);
            let lhs = u.multiply(&v).unwrap().sobolev_norm(s1);
            let rhs = ALGEBRA_CONSTANT_D1_S1 * u.sobolev_norm(s1) * v.sobolev_norm(s1);
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn grid_square_agrees_with_multiply(u in sparse_field(1, 4, 5)) {
            let sq = u.grid_apply(&ScalarFunction::from_id("square").unwrap(), 4, 8).unwrap();
            prop_assert!((&sq - &u.multiply(&u).unwrap()).max_coefficient() < 1e-10);
        }

        #[test]
        fn power_support_in_sumset(u in sparse_field(2, 2, 3), p in 1u32..=5) {
            let mut base: Vec<Frequency> = vec![Frequency::zero(2)];
            for k in u.support() {
                base.push(k.clone());
                base.push(k.neg());
            }
            let mut sumset = std::collections::BTreeSet::new();
            sumset.insert(Frequency::zero(2));
            for _ in 0..p {
                let next: std::collections::BTreeSet<Frequency> =
                    sumset.iter().flat_map(|a| base.iter().map(move |b| a.add(b))).collect();
                sumset = next;
            }
            for k in u.power(p).support() {
                prop_assert!(sumset.contains(k), "mode {} outside the {}-fold sumset", k, p);
            }
        }

        #[test]
        fn projection_idempotent_and_commutes(u in sparse_field(2, 5, 8), n in 0i64..5) {
            let p = u.project_box(n);
            prop_assert_eq!(p.project_box(n), p.clone());
            prop_assert_eq!(u.laplacian().project_box(n), p.laplacian());
        }

        #[test]
        fn json_roundtrip_bit_faithful(u in sparse_field(3, 4, 6)) {
            let text = serde_json::to_string(&u).unwrap();
            let back: TrigField = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, u);
        }
    }
}
