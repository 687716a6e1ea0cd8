use serde::{Deserialize, Serialize};

use super::{FrequencySet, SaturationError};
use crate::spectral::Frequency;

/// How one growth step enlarges a frequency set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthMode {
    /// `I ∪ {l ± m : l, m ∈ I}`.
    Pairwise,
    /// The `p`-fold sumset `I + ... + I`; odd `p` only.
    FullP,
}

/// Levels `I_0 ⊆ I_1 ⊆ ...` produced by [`saturate`], each restricted to the
/// working box `|k|_inf <= working_radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationTrace {
    pub levels: Vec<FrequencySet>,
    /// Level index `j` of each entry of `levels` in the `H_j` numbering. Even
    /// degrees advance by two per pairwise growth.
    pub level_indices: Vec<usize>,
    pub degree: u32,
    pub mode: GrowthMode,
    pub box_cutoff: i64,
    pub working_radius: i64,
    pub covered: bool,
    pub fixpoint: bool,
}

impl SaturationTrace {
    pub fn last(&self) -> &FrequencySet {
        self.levels.last().expect("trace has at least the initial level")
    }

    /// Position in `levels` of the first level containing `k`.
    pub fn level_of(&self, k: &Frequency) -> Option<usize> {
        self.levels.iter().position(|level| level.contains(k))
    }
}

pub fn grow_once(set: &FrequencySet, p: u32, mode: GrowthMode) -> Result<FrequencySet, SaturationError> {
    check_mode(p, mode)?;
    let elems: Vec<&Frequency> = set.iter().collect();
    let fold = match mode {
        GrowthMode::Pairwise => 2,
        GrowthMode::FullP => p,
    };
    let mut acc: Vec<Frequency> = elems.iter().map(|k| (*k).clone()).collect();
    for _ in 1..fold {
        let mut next = std::collections::BTreeSet::new();
        for a in &acc {
            for b in &elems {
                next.insert(a.add(b));
                if mode == GrowthMode::Pairwise {
                    next.insert(a.sub(b));
                }
            }
        }
        acc = next.into_iter().collect();
    }
    let mut all: Vec<Frequency> = set.iter().cloned().collect();
    all.extend(acc);
    FrequencySet::new(set.dim(), all)
}

fn check_mode(p: u32, mode: GrowthMode) -> Result<(), SaturationError> {
    if p < 2 {
        return Err(SaturationError::InvalidDegree(p));
    }
    if mode == GrowthMode::FullP && p.is_multiple_of(2) {
        return Err(SaturationError::EvenDegreeFullProduct(p));
    }
    Ok(())
}

/// Pairwise saturation with the default working box.
pub fn saturate(set: &FrequencySet, p: u32, cutoff: i64, max_levels: usize) -> Result<SaturationTrace, SaturationError> {
    saturate_with(set, p, cutoff, max_levels, GrowthMode::Pairwise)
}

/// Default working radius: growth is tracked inside `|k|_inf <= W` so that
/// elements needed as intermediate sums are not lost to the truncation.
pub fn working_radius(set: &FrequencySet, cutoff: i64) -> i64 {
    let r = set.radius();
    2 * cutoff.max(r) + r
}

pub fn saturate_with(
    set: &FrequencySet,
    p: u32,
    cutoff: i64,
    max_levels: usize,
    mode: GrowthMode,
) -> Result<SaturationTrace, SaturationError> {
    check_mode(p, mode)?;
    if cutoff < 0 {
        return Err(SaturationError::InvalidCutoff(cutoff));
    }
    let dim = set.dim();
    let radius = working_radius(set, cutoff);
    let step = if p.is_multiple_of(2) { 2 } else { 1 };
    let mut bits = BoxBits::new(dim, radius);
    let mut members: Vec<Vec<i64>> = Vec::new();
    for k in set.iter() {
        if bits.insert(k.components()) {
            members.push(k.components().to_vec());
        }
    }
    let mut levels = vec![bits.to_set(&members)];
    let mut level_indices = vec![0];
    let mut covered = bits.covers(cutoff);
    let mut fixpoint = false;
    // Members added by the previous step; pairs of older members were already combined.
    let mut fresh_from = 0;
    while !covered && levels.len() <= max_levels {
        let added = match mode {
            GrowthMode::Pairwise => pairwise_step(&mut bits, &mut members, fresh_from),
            GrowthMode::FullP => full_step(&mut bits, &mut members, p),
        };
        if added == 0 {
            fixpoint = true;
            break;
        }
        fresh_from = members.len() - added;
        levels.push(bits.to_set(&members));
        level_indices.push(level_indices.last().unwrap() + step);
        covered = bits.covers(cutoff);
    }
    Ok(SaturationTrace {
        levels,
        level_indices,
        degree: p,
        mode,
        box_cutoff: cutoff,
        working_radius: radius,
        covered,
        fixpoint,
    })
}

/// Adds `a + b` for `a` fresh and `b` any member; returns the number added.
fn pairwise_step(bits: &mut BoxBits, members: &mut Vec<Vec<i64>>, fresh_from: usize) -> usize {
    let before = members.len();
    let mut sum = vec![0i64; bits.dim];
    for i in fresh_from..before {
        for j in 0..before {
            for (s, (a, b)) in sum.iter_mut().zip(members[i].iter().zip(&members[j])) {
                *s = a + b;
            }
            if bits.insert(&sum) {
                members.push(sum.clone());
            }
        }
    }
    members.len() - before
}

fn full_step(bits: &mut BoxBits, members: &mut Vec<Vec<i64>>, p: u32) -> usize {
    let before = members.len();
    let base: Vec<Vec<i64>> = members.clone();
    let mut acc: Vec<Vec<i64>> = base.clone();
    for _ in 1..p {
        let mut next_bits = BoxBits::new(bits.dim, bits.radius);
        let mut next = Vec::new();
        let mut sum = vec![0i64; bits.dim];
        for a in &acc {
            for b in &base {
                for (s, (x, y)) in sum.iter_mut().zip(a.iter().zip(b)) {
                    *s = x + y;
                }
                if next_bits.insert(&sum) {
                    next.push(sum.clone());
                }
            }
        }
        acc = next;
    }
    for v in acc {
        if bits.insert(&v) {
            members.push(v);
        }
    }
    members.len() - before
}

/// Dense membership bitmap for the box `|k|_inf <= radius`.
struct BoxBits {
    dim: usize,
    radius: i64,
    side: usize,
    bits: Vec<bool>,
}

impl BoxBits {
    fn new(dim: usize, radius: i64) -> Self {
        let side = (2 * radius + 1) as usize;
        BoxBits {
            dim,
            radius,
            side,
            bits: vec![false; side.pow(dim as u32)],
        }
    }

    fn index(&self, k: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for &c in k {
            if c.abs() > self.radius {
                return None;
            }
            idx = idx * self.side + (c + self.radius) as usize;
        }
        Some(idx)
    }

    /// Inserts `k` if it lies in the box and is new.
    fn insert(&mut self, k: &[i64]) -> bool {
        match self.index(k) {
            Some(i) if !self.bits[i] => {
                self.bits[i] = true;
                true
            }
            _ => false,
        }
    }

    fn covers(&self, cutoff: i64) -> bool {
        crate::spectral::box_frequencies(self.dim, cutoff)
            .iter()
            .all(|k| self.index(k.components()).is_some_and(|i| self.bits[i]))
    }

    fn to_set(&self, members: &[Vec<i64>]) -> FrequencySet {
        FrequencySet::new(self.dim, members.iter().map(|v| Frequency::new(v.clone()))).expect("consistent dimension")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set1(v: &[i64]) -> FrequencySet {
        FrequencySet::new(1, v.iter().map(|&c| Frequency::from([c]))).unwrap()
    }

    #[test]
    fn grow_examples() {
        let i = set1(&[0, 1, -1]);
        assert_eq!(grow_once(&i, 3, GrowthMode::Pairwise).unwrap(), set1(&[0, 1, -1, 2, -2]));
        assert_eq!(
            grow_once(&i, 3, GrowthMode::FullP).unwrap(),
            set1(&[0, 1, -1, 2, -2, 3, -3])
        );
        let origin = set1(&[0]);
        assert_eq!(grow_once(&origin, 2, GrowthMode::Pairwise).unwrap(), origin);
        assert!(matches!(
            grow_once(&i, 4, GrowthMode::FullP),
            Err(SaturationError::EvenDegreeFullProduct(4))
        ));
    }

    #[test]
    fn saturate_examples() {
        let trace = saturate(&FrequencySet::cross(2), 3, 4, 10).unwrap();
        assert!(trace.covered);
        assert!(trace.levels.len() - 1 <= 4);
        assert_eq!(trace.level_indices, (0..trace.levels.len()).collect::<Vec<_>>());

        let even = saturate(&set1(&[0, 2, -2]), 3, 1, 10).unwrap();
        assert!(!even.covered);
        assert!(even.fixpoint);

        let origin = saturate(&set1(&[0]), 2, 1, 10).unwrap();
        assert!(!origin.covered && origin.fixpoint && origin.levels.len() == 1);
        assert!(saturate(&set1(&[0]), 2, 0, 10).unwrap().covered);
    }

    #[test]
    fn even_degree_counts_two_levels_per_growth() {
        let trace = saturate(&set1(&[0, 1, -1]), 2, 4, 10).unwrap();
        assert!(trace.covered);
        let steps: Vec<usize> = trace.level_indices.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps.iter().all(|&s| s == 2));
    }

    #[test]
    fn full_growth_trace_matches_grow_once() {
        let i = set1(&[0, 1, -1]);
        let trace = saturate_with(&i, 3, 9, 5, GrowthMode::FullP).unwrap();
        assert_eq!(trace.levels[1], grow_once(&i, 3, GrowthMode::FullP).unwrap());
        assert!(trace.covered);
        assert_eq!(trace.levels.len(), 3);
    }

    #[test]
    fn incremental_levels_match_direct_growth() {
        let i = FrequencySet::symmetric(2, [Frequency::from([2, 1]), Frequency::from([0, 1])]).unwrap();
        let trace = saturate(&i, 3, 3, 3).unwrap();
        let w = trace.working_radius;
        let mut direct = i.clone();
        for level in &trace.levels[1..] {
            direct = grow_once(&direct, 3, GrowthMode::Pairwise).unwrap();
            let clipped = FrequencySet::new(2, direct.iter().filter(|k| k.max_abs() <= w).cloned()).unwrap();
            assert_eq!(level, &clipped);
            direct = clipped;
        }
    }
}
