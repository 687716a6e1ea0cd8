//! Explicit decompositions of a single trigonometric mode into an element of
//! the cone `eta - c * sum_m zeta_m^p` with `eta`, `zeta_m` built from the
//! modes of a smaller frequency set.
//!
//! A recipe stores weights `w_m` with
//!
//! ```text
//! target ≈ eta + sum_m w_m * zeta_m^p
//! ```
//!
//! and every weight has the sign of `-c`, so that `w_m zeta_m^p = -c (lambda_m zeta_m)^p`
//! with `lambda_m = (-w_m / c)^(1/p)` real. Three branches:
//!
//! * odd `p`: products of cosines and sines are polarized,
//!   `f_1 ... f_p = 1/(2^p p!) sum_e (prod e_i) (sum e_i f_i)^p`, with the unused
//!   factors set to 1. Exact; `eta = 0`.
//! * `p = 2`: `2 sigma A B = (A + sigma B)^2 - A^2 - B^2` and
//!   `cos 2m = 1 - 2 sin^2 m = 2 cos^2 m - 1`. Exact.
//! * even `p >= 4`: `zeta = eps^alpha + eps S` with `alpha = -2/(p-2)`. The
//!   term `eps^(p(j-2)/(p-2)) S^j` of the binomial expansion is large for
//!   `j < 2`, of order one for `j = 2` (which carries the target) and vanishes
//!   like `eps^(p/(p-2))` or faster for `j >= 3`. The terms with `j < 2` go into
//!   `eta`.

use serde::{Deserialize, Serialize};

use super::{FrequencySet, SaturationError};
use crate::spectral::{Frequency, Phase, SobolevIndex, TrigField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeBranch {
    /// The target already lies in the available span.
    Direct,
    OddProduct,
    ExactSquare,
    PerturbedPower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecipeStep {
    /// The field raised to the power `p`.
    pub zeta: TrigField,
    pub weight: f64,
    /// `S` in `zeta = eps^alpha + eps S`; equal to `zeta` outside the
    /// perturbed branch.
    pub shape: TrigField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRecipe {
    pub target: Frequency,
    pub phase: Phase,
    pub degree: u32,
    pub leading: f64,
    pub epsilon: f64,
    /// `-2/(p-2)` in the perturbed branch.
    pub alpha: Option<f64>,
    pub branch: RecipeBranch,
    pub eta: TrigField,
    pub steps: Vec<RecipeStep>,
}

impl DecompositionRecipe {
    pub fn target_field(&self) -> TrigField {
        TrigField::mode(self.target.clone(), self.phase, 1.0)
    }

    /// `eta + sum_m w_m zeta_m^p`, expanded exactly.
    pub fn expand(&self) -> TrigField {
        let mut acc = self.eta.clone();
        for step in &self.steps {
            acc = acc
                .axpy(step.weight, &step.zeta.power(self.degree))
                .expect("recipe fields share a dimension");
        }
        acc
    }

    /// `|| expand() - target ||_s`.
    pub fn residual(&self, s: SobolevIndex) -> f64 {
        (&self.expand() - &self.target_field()).sobolev_norm(s)
    }

    /// Exponent `gamma` with residual `O(eps^gamma)`; `None` for exact branches.
    pub fn rate(&self) -> Option<f64> {
        match self.branch {
            RecipeBranch::PerturbedPower => {
                let p = self.degree as f64;
                Some(p / (p - 2.0))
            }
            _ => None,
        }
    }

    /// Upper bound on [`residual`](Self::residual): the neglected binomial
    /// terms plus an allowance for floating-point cancellation.
    pub fn residual_bound(&self, s: SobolevIndex) -> f64 {
        self.truncation_bound(s) + self.rounding_bound(s)
    }

    /// Norm of the binomial terms with `j >= 3` (zero for exact branches).
    pub fn truncation_bound(&self, s: SobolevIndex) -> f64 {
        if self.branch != RecipeBranch::PerturbedPower {
            return 0.0;
        }
        let p = self.degree;
        let mut total = 0.0;
        for step in &self.steps {
            let mut sj = step.shape.power(2);
            for j in 3..=p {
                sj = sj.multiply(&step.shape).expect("same dimension");
                total += step.weight.abs()
                    * binomial(p, j)
                    * binomial_exponent(self.epsilon, p, j)
                    * sj.sobolev_norm(s);
            }
        }
        total
    }

    /// Rounding allowance: each coefficient of `zeta^p` is a sum of products
    /// bounded by `B^p` with `B` the l1 norm of the complex coefficients of
    /// `zeta`, and the huge terms cancel against `eta`.
    pub fn rounding_bound(&self, s: SobolevIndex) -> f64 {
        let p = self.degree;
        let kmax = self
            .steps
            .iter()
            .map(|st| st.zeta.max_frequency())
            .chain(std::iter::once(self.eta.max_frequency()))
            .max()
            .unwrap_or(0) as f64;
        let weight = (1.0 + (p as f64 * kmax).powi(2)).powf(s.value() / 2.0);
        let mut scale = l1_norm(&self.eta);
        let mut terms = 1.0f64;
        for step in &self.steps {
            scale += step.weight.abs() * l1_norm(&step.zeta).powi(p as i32);
            terms = terms.max((2 * step.zeta.len() + 1) as f64);
        }
        let modes = (2.0 * p as f64 * kmax + 1.0).powi(self.target.dim() as i32);
        16.0 * f64::EPSILON * (p as f64 + 2.0) * terms * modes.sqrt() * weight * scale
    }

    /// Cone form: `target ≈ eta - c * sum_m zeta_m^p` with the returned
    /// `zeta_m = lambda_m * zeta`.
    pub fn cone_zetas(&self) -> Vec<TrigField> {
        let p = self.degree as f64;
        self.steps
            .iter()
            .map(|st| {
                let ratio = -st.weight / self.leading;
                let lambda = ratio.signum() * ratio.abs().powf(1.0 / p);
                st.zeta.scale(lambda)
            })
            .collect()
    }
}

fn l1_norm(f: &TrigField) -> f64 {
    f.iter()
        .map(|(k, m)| if k.is_zero() { m.cos.abs() } else { m.cos.abs() + m.sin.abs() })
        .sum()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `eps^(p(j-2)/(p-2))`, the factor multiplying `S^j` in `(eps^alpha + eps S)^p`.
fn binomial_exponent(eps: f64, p: u32, j: u32) -> f64 {
    eps.powf(p as f64 * (j as f64 - 2.0) / (p as f64 - 2.0))
}

fn check_inputs(target: &Frequency, available: &FrequencySet, p: u32, leading: f64, eps: f64) -> Result<(), SaturationError> {
    if p < 2 {
        return Err(SaturationError::InvalidDegree(p));
    }
    if target.dim() != available.dim() {
        return Err(SaturationError::DimensionMismatch {
            expected: available.dim(),
            found: target.dim(),
        });
    }
    if !(leading.is_finite() && leading != 0.0) {
        return Err(SaturationError::InvalidParameter(format!("leading coefficient {leading}")));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(SaturationError::InvalidParameter(format!("epsilon {eps}")));
    }
    Ok(())
}

fn direct(target: &Frequency, phase: Phase, p: u32, leading: f64, eps: f64) -> DecompositionRecipe {
    DecompositionRecipe {
        target: target.clone(),
        phase,
        degree: p,
        leading,
        epsilon: eps,
        alpha: None,
        branch: RecipeBranch::Direct,
        eta: TrigField::mode(target.clone(), phase, 1.0),
        steps: Vec::new(),
    }
}

/// Decomposes `cos<x,k>` or `sin<x,k>` with `k = l + m`, `l, m` in `available`.
pub fn decompose_mode(
    target: &Frequency,
    phase: Phase,
    available: &FrequencySet,
    p: u32,
    leading: f64,
    eps: f64,
) -> Result<DecompositionRecipe, SaturationError> {
    check_inputs(target, available, p, leading, eps)?;
    if available.contains(target) || (target.is_zero() && phase == Phase::Cos) {
        return Ok(direct(target, phase, p, leading, eps));
    }
    let unreachable = || SaturationError::Unreachable { target: target.clone() };
    if p % 2 == 1 {
        let (l, m) = split_pair(target, available).ok_or_else(unreachable)?;
        let mut factors = vec![l, m];
        factors.resize(p as usize, Frequency::zero(target.dim()));
        return Ok(odd_recipe(target, phase, &factors, p, leading, eps));
    }
    even_recipe(target, phase, available, p, leading, eps).ok_or_else(unreachable)
}

/// Decomposes a mode whose frequency is a sum of at most `p` elements of
/// `available` (odd `p` only), polarizing the full `p`-fold product.
pub fn decompose_product(
    target: &Frequency,
    phase: Phase,
    available: &FrequencySet,
    p: u32,
    leading: f64,
) -> Result<DecompositionRecipe, SaturationError> {
    let eps = 0.1;
    check_inputs(target, available, p, leading, eps)?;
    if p.is_multiple_of(2) {
        return Err(SaturationError::EvenDegreeFullProduct(p));
    }
    if available.contains(target) || (target.is_zero() && phase == Phase::Cos) {
        return Ok(direct(target, phase, p, leading, eps));
    }
    let factors = split_sum(target, available, p as usize)
        .ok_or_else(|| SaturationError::Unreachable { target: target.clone() })?;
    Ok(odd_recipe(target, phase, &factors, p, leading, eps))
}

/// Halves `eps` from 0.1 until the measured residual is at most `budget / 10`.
pub fn decompose_within(
    target: &Frequency,
    phase: Phase,
    available: &FrequencySet,
    p: u32,
    leading: f64,
    s: SobolevIndex,
    budget: f64,
) -> Result<DecompositionRecipe, SaturationError> {
    let mut eps = 0.1;
    let mut best: Option<DecompositionRecipe> = None;
    for _ in 0..60 {
        let recipe = decompose_mode(target, phase, available, p, leading, eps)?;
        let r = recipe.residual(s);
        if r <= budget / 10.0 {
            return Ok(recipe);
        }
        if recipe.rate().is_none() {
            return Err(SaturationError::ResidualTooLarge { residual: r, budget });
        }
        if let Some(prev) = &best {
            // Rounding has taken over once halving stops helping.
            if r >= prev.residual(s) {
                return Err(SaturationError::ResidualTooLarge { residual: r, budget });
            }
        }
        best = Some(recipe);
        eps *= 0.5;
    }
    Err(SaturationError::ResidualTooLarge {
        residual: best.map(|b| b.residual(s)).unwrap_or(f64::INFINITY),
        budget,
    })
}

/// First `(l, m)` with `l + m = target`, both nonzero elements of `available`.
fn split_pair(target: &Frequency, available: &FrequencySet) -> Option<(Frequency, Frequency)> {
    available
        .iter()
        .filter(|l| !l.is_zero())
        .map(|l| (l.clone(), target.sub(l)))
        .find(|(_, m)| !m.is_zero() && available.contains(m))
}

/// Nonzero elements `k_1..k_q` (`q <= n`) of `available` summing to `target`,
/// padded with zeros to length `n`.
fn split_sum(target: &Frequency, available: &FrequencySet, n: usize) -> Option<Vec<Frequency>> {
    let dim = target.dim();
    let nonzero: Vec<&Frequency> = available.iter().filter(|k| !k.is_zero()).collect();
    // reach[j] = sums of exactly j nonzero elements, bounded to keep the search finite.
    let bound = target.max_abs() + n as i64 * available.radius();
    let mut reach = vec![std::collections::BTreeSet::from([Frequency::zero(dim)])];
    for j in 1..=n {
        let next: std::collections::BTreeSet<Frequency> = reach[j - 1]
            .iter()
            .flat_map(|a| nonzero.iter().map(move |b| a.add(b)))
            .filter(|k| k.max_abs() <= bound)
            .collect();
        reach.push(next);
    }
    let q = (1..=n).find(|&j| reach[j].contains(target))?;
    let mut factors = Vec::with_capacity(n);
    let mut rest = target.clone();
    for j in (1..=q).rev() {
        let k = nonzero.iter().find(|k| reach[j - 1].contains(&rest.sub(k)))?;
        factors.push((*k).clone());
        rest = rest.sub(k);
    }
    factors.resize(n, Frequency::zero(dim));
    Some(factors)
}

/// `cos` or `sin` of `sum_i <x, k_i>` as signed products of `cos<x,k_i>` and
/// `sin<x,k_i>`: returns `(sign, fields)` with one field per factor.
fn angle_sum_products(factors: &[Frequency], phase: Phase) -> Vec<(f64, Vec<TrigField>)> {
    let nonzero: Vec<usize> = (0..factors.len()).filter(|&i| !factors[i].is_zero()).collect();
    let dim = factors[0].dim();
    let mut out = Vec::new();
    // Subsets of the nonzero factors taking the sine; the product of
    // (cos + i sin) picks up i^|S|.
    for mask in 0u32..(1 << nonzero.len()) {
        let size = mask.count_ones();
        let sign = match (phase, size % 4) {
            (Phase::Cos, 0) | (Phase::Sin, 1) => 1.0,
            (Phase::Cos, 2) | (Phase::Sin, 3) => -1.0,
            _ => continue,
        };
        let mut fields: Vec<TrigField> = vec![TrigField::constant(dim, 1.0); factors.len()];
        for (bit, &i) in nonzero.iter().enumerate() {
            fields[i] = if mask & (1 << bit) != 0 {
                TrigField::sin(factors[i].clone(), 1.0)
            } else {
                TrigField::cos(factors[i].clone(), 1.0)
            };
        }
        out.push((sign, fields));
    }
    out
}

fn merge_step(steps: &mut Vec<RecipeStep>, zeta: TrigField, weight: f64) {
    if let Some(step) = steps.iter_mut().find(|st| st.zeta == zeta) {
        step.weight += weight;
    } else {
        steps.push(RecipeStep {
            shape: zeta.clone(),
            zeta,
            weight,
        });
    }
}

fn odd_recipe(target: &Frequency, phase: Phase, factors: &[Frequency], p: u32, leading: f64, eps: f64) -> DecompositionRecipe {
    let dim = target.dim();
    let n = factors.len();
    let norm = 2.0 / (2f64.powi(n as i32) * (1..=n).map(|i| i as f64).product::<f64>());
    let mut steps: Vec<RecipeStep> = Vec::new();
    for (sign, fields) in angle_sum_products(factors, phase) {
        // Sign patterns with the first sign fixed to +1; the flipped pattern
        // gives the same term because p is odd.
        for mask in 0u32..(1 << (n - 1)) {
            let mut zeta = fields[0].clone();
            let mut parity = 1.0;
            for (i, f) in fields.iter().enumerate().skip(1) {
                let e = if mask & (1 << (i - 1)) != 0 { -1.0 } else { 1.0 };
                parity *= e;
                zeta = zeta.axpy(e, f).expect("same dimension");
            }
            if !zeta.is_zero() {
                merge_step(&mut steps, zeta, sign * parity * norm);
            }
        }
    }
    steps.retain(|st| st.weight != 0.0);
    // Realize each weight with the sign of -c by flipping zeta (p is odd).
    for st in &mut steps {
        if st.weight * leading > 0.0 {
            st.weight = -st.weight;
            st.zeta = -&st.zeta;
            st.shape = st.zeta.clone();
        }
    }
    DecompositionRecipe {
        target: target.clone(),
        phase,
        degree: p,
        leading,
        epsilon: eps,
        alpha: None,
        branch: RecipeBranch::OddProduct,
        eta: TrigField::zero(dim),
        steps,
    }
}

fn even_recipe(
    target: &Frequency,
    phase: Phase,
    available: &FrequencySet,
    p: u32,
    leading: f64,
    eps: f64,
) -> Option<DecompositionRecipe> {
    let pf = p as f64;
    let pair_weight = 1.0 / (pf * (pf - 1.0));
    let c_sign = leading.signum();
    // (weight, shape S) pairs; the target is the S^2 part of sum_m w_m zeta_m^p.
    let mut shapes: Vec<(f64, TrigField)> = Vec::new();
    let product = |s: f64, a: TrigField, b: TrigField, shapes: &mut Vec<(f64, TrigField)>| {
        let sigma = -s.signum() * c_sign;
        shapes.push((s * sigma * pair_weight, a.axpy(sigma, &b).expect("same dimension")));
    };
    let halves = target.components().iter().all(|c| c % 2 == 0);
    let half = Frequency::new(target.components().iter().map(|c| c / 2).collect());
    if halves && available.contains(&half) {
        match phase {
            Phase::Cos => {
                // cos 2m = 2 cos^2 m - 1 = 1 - 2 sin^2 m.
                let (w, s) = if leading < 0.0 {
                    (4.0 * pair_weight, TrigField::cos(half, 1.0))
                } else {
                    (-4.0 * pair_weight, TrigField::sin(half, 1.0))
                };
                shapes.push((w, s));
            }
            Phase::Sin => product(2.0, TrigField::sin(half.clone(), 1.0), TrigField::cos(half, 1.0), &mut shapes),
        }
    } else {
        let (l, m) = split_pair(target, available)?;
        let (cl, sl) = (TrigField::cos(l.clone(), 1.0), TrigField::sin(l, 1.0));
        let (cm, sm) = (TrigField::cos(m.clone(), 1.0), TrigField::sin(m, 1.0));
        match phase {
            Phase::Cos => {
                product(1.0, cl, cm, &mut shapes);
                product(-1.0, sl, sm, &mut shapes);
            }
            Phase::Sin => {
                product(1.0, sl, cm, &mut shapes);
                product(1.0, cl, sm, &mut shapes);
            }
        }
    }
    let dim = target.dim();
    let perturbed = p >= 4;
    let alpha = -2.0 / (pf - 2.0);
    let mut eta = TrigField::mode(target.clone(), phase, 1.0);
    let mut steps = Vec::new();
    for (w, shape) in shapes {
        let square = shape.power(2);
        let (zeta, kept) = if perturbed {
            let lift = eps.powf(alpha);
            let zeta = TrigField::constant(dim, lift).axpy(eps, &shape).expect("same dimension");
            // j = 0, 1, 2 terms of (eps^alpha + eps S)^p.
            let kept = TrigField::constant(dim, binomial_exponent(eps, p, 0))
                .axpy(pf * binomial_exponent(eps, p, 1), &shape)
                .and_then(|t| t.axpy(binomial(p, 2), &square))
                .expect("same dimension");
            (zeta, kept)
        } else {
            (shape.clone(), square)
        };
        eta = eta.axpy(-w, &kept).expect("same dimension");
        steps.push(RecipeStep { zeta, weight: w, shape });
    }
    Some(DecompositionRecipe {
        target: target.clone(),
        phase,
        degree: p,
        leading,
        epsilon: eps,
        alpha: perturbed.then_some(alpha),
        branch: if perturbed {
            RecipeBranch::PerturbedPower
        } else {
            RecipeBranch::ExactSquare
        },
        eta,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s1() -> SobolevIndex {
        SobolevIndex::new(1.0).unwrap()
    }

    fn line(v: &[i64]) -> FrequencySet {
        FrequencySet::new(1, v.iter().map(|&c| Frequency::from([c]))).unwrap()
    }

    #[test]
    fn square_recipe_for_cos_2x_is_exact() {
        let i = line(&[0, 1, -1]);
        for c in [1.0, -1.0, 2.5] {
            let r = decompose_mode(&Frequency::from([2]), Phase::Cos, &i, 2, c, 0.1).unwrap();
            assert_eq!(r.branch, RecipeBranch::ExactSquare);
            assert_eq!(r.expand(), r.target_field());
            assert_eq!(r.residual(s1()), 0.0);
            assert!(r.steps.iter().all(|st| st.weight * c < 0.0));
            assert!(r.eta.support().all(|k| i.contains(k)));
        }
    }

    #[test]
    fn cubic_product_identity() {
        // AB = [(1+A+B)^3 - (1+A-B)^3 - (1-A+B)^3 + (1-A-B)^3] / 24
        let a = TrigField::cos([1], 1.0);
        let b = TrigField::sin([2], 1.0);
        let one = TrigField::constant(1, 1.0);
        let cube = |x: &TrigField| x.power(3);
        let sum = |ea: f64, eb: f64| one.axpy(ea, &a).unwrap().axpy(eb, &b).unwrap();
        let lhs = a.multiply(&b).unwrap();
        let rhs = (&(&cube(&sum(1.0, 1.0)) - &cube(&sum(1.0, -1.0))) - &cube(&sum(-1.0, 1.0)))
            .axpy(1.0, &cube(&sum(-1.0, -1.0)))
            .unwrap()
            .scale(1.0 / 24.0);
        assert!((&lhs - &rhs).sobolev_norm(s1()) < 1e-14);
    }

    #[test]
    fn odd_recipes_reproduce_targets() {
        let i = line(&[0, 1, -1, 2, -2]);
        for target in [3, 4, -1 + 4] {
            for phase in [Phase::Cos, Phase::Sin] {
                for c in [1.0, -0.5] {
                    let r = decompose_mode(&Frequency::from([target]), phase, &i, 3, c, 0.1).unwrap();
                    assert_eq!(r.branch, RecipeBranch::OddProduct);
                    assert!(r.residual(s1()) <= r.residual_bound(s1()), "{target} {phase:?}");
                    assert!(r.steps.iter().all(|st| st.weight * c < 0.0));
                    assert!(r.steps.iter().all(|st| i.supports(&st.zeta)));
                }
            }
        }
    }

    #[test]
    fn full_product_recipes() {
        let i = line(&[0, 1, -1]);
        for p in [3, 5] {
            for target in 2..=p as i64 {
                let r = decompose_product(&Frequency::from([target]), Phase::Sin, &i, p, 1.0).unwrap();
                assert!(r.residual(s1()) < 1e-12, "p={p} k={target}: {}", r.residual(s1()));
            }
        }
        assert!(matches!(
            decompose_product(&Frequency::from([4]), Phase::Cos, &i, 3, 1.0),
            Err(SaturationError::Unreachable { .. })
        ));
    }

    #[test]
    fn quartic_perturbed_recipe() {
        let i = line(&[0, 1, -1]);
        let target = Frequency::from([2]);
        let mut last = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3] {
            let r = decompose_mode(&target, Phase::Cos, &i, 4, 1.0, eps).unwrap();
            assert_eq!(r.alpha, Some(-1.0));
            assert_eq!(r.rate(), Some(2.0));
            let res = r.residual(s1());
            assert!(res <= r.residual_bound(s1()));
            assert!(res < last);
            last = res;
            assert!(r.steps.iter().all(|st| i.supports(&st.zeta)));
        }
    }

    #[test]
    fn cone_form_matches_expansion() {
        let i = FrequencySet::cross(2);
        let target = Frequency::from([1, -1]);
        for (p, c) in [(2, 1.0), (3, -2.0), (4, 0.5)] {
            let r = decompose_mode(&target, Phase::Sin, &i, p, c, 1e-2).unwrap();
            let mut cone = r.eta.clone();
            for z in r.cone_zetas() {
                cone = cone.axpy(-c, &z.power(p)).unwrap();
            }
            assert!((&cone - &r.expand()).sobolev_norm(s1()) <= r.rounding_bound(s1()) + 1e-12, "p={p}");
        }
    }

    #[test]
    fn unreachable_target() {
        let i = line(&[0, 1, -1]);
        for p in [2, 3, 4] {
            assert!(matches!(
                decompose_mode(&Frequency::from([3]), Phase::Cos, &i, p, 1.0, 0.1),
                Err(SaturationError::Unreachable { .. })
            ));
        }
    }

    #[test]
    fn within_budget_search() {
        let i = line(&[0, 1, -1]);
        let r = decompose_within(&Frequency::from([2]), Phase::Sin, &i, 4, 1.0, s1(), 1e-2).unwrap();
        assert!(r.residual(s1()) <= 1e-3);
        let exact = decompose_within(&Frequency::from([2]), Phase::Sin, &i, 3, 1.0, s1(), 1e-6).unwrap();
        assert_eq!(exact.epsilon, 0.1);
    }
}
