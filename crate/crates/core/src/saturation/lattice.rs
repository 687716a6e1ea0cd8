//! Integer lattices spanned by frequency sets: Hermite normal form, membership
//! and the gcd-of-determinants generator test.

use serde::{Deserialize, Serialize};

use super::{FrequencySet, SaturationError};
use crate::spectral::Frequency;

/// Upper bound on the number of `d`-tuples examined by [`gcd_determinant`].
pub const MAX_DETERMINANT_TUPLES: u128 = 1_000_000;

/// Row-style Hermite normal form of a sublattice of `Z^d`.
///
/// Rows are in echelon form with strictly increasing pivot columns, positive
/// pivots, and entries above each pivot reduced into `[0, pivot)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBasis {
    pub dim: usize,
    pub rows: Vec<Vec<i64>>,
    pub pivots: Vec<usize>,
}

impl LatticeBasis {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Index `[Z^d : L]`, or `None` when the lattice is not of full rank.
    pub fn index(&self) -> Option<u64> {
        if self.rank() < self.dim {
            return None;
        }
        Some(
            self.rows
                .iter()
                .zip(&self.pivots)
                .map(|(r, &c)| r[c] as u64)
                .product(),
        )
    }

    pub fn is_full_lattice(&self) -> bool {
        self.index() == Some(1)
    }

    /// Whether `k` is an integer combination of the basis rows.
    pub fn contains(&self, k: &Frequency) -> bool {
        assert_eq!(k.dim(), self.dim);
        let mut residual: Vec<i128> = k.components().iter().map(|&c| c as i128).collect();
        let mut col = 0;
        for (row, &pivot) in self.rows.iter().zip(&self.pivots) {
            if residual[col..pivot].iter().any(|&c| c != 0) {
                return false;
            }
            let p = row[pivot] as i128;
            if residual[pivot] % p != 0 {
                return false;
            }
            let q = residual[pivot] / p;
            for (r, &b) in residual.iter_mut().zip(row) {
                *r -= q * b as i128;
            }
            col = pivot + 1;
        }
        residual.iter().all(|&c| c == 0)
    }
}

/// Hermite normal form of the lattice of integer combinations of `set`.
pub fn lattice_span(set: &FrequencySet) -> LatticeBasis {
    let dim = set.dim();
    let mut rows: Vec<Vec<i128>> = set
        .canonical_nonzero()
        .iter()
        .map(|k| k.components().iter().map(|&c| c as i128).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..dim {
        if r == rows.len() {
            break;
        }
        loop {
            // Row with the smallest nonzero |entry| in this column becomes the pivot.
            let best = (r..rows.len())
                .filter(|&i| rows[i][col] != 0)
                .min_by_key(|&i| rows[i][col].abs());
            let Some(best) = best else { break };
            rows.swap(r, best);
            let mut done = true;
            for i in r + 1..rows.len() {
                if rows[i][col] != 0 {
                    let q = rows[i][col].div_euclid(rows[r][col]);
                    let pivot_row = rows[r].clone();
                    for (x, y) in rows[i].iter_mut().zip(&pivot_row) {
                        *x -= q * y;
                    }
                    if rows[i][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if rows[r][col] == 0 {
            continue;
        }
        if rows[r][col] < 0 {
            for x in rows[r].iter_mut() {
                *x = -*x;
            }
        }
        let pivot_row = rows[r].clone();
        for row in rows.iter_mut().take(r) {
            let q = row[col].div_euclid(pivot_row[col]);
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                *x -= q * y;
            }
        }
        pivots.push(col);
        r += 1;
    }
    rows.truncate(r);
    LatticeBasis {
        dim,
        rows: rows
            .into_iter()
            .map(|row| row.into_iter().map(|x| x as i64).collect())
            .collect(),
        pivots,
    }
}

/// Whether the integer combinations of `set` exhaust `Z^d`.
pub fn is_generator(set: &FrequencySet) -> bool {
    lattice_span(set).is_full_lattice()
}

/// gcd of `|det(a_1, ..., a_d)|` over `d`-tuples from `set` (0 if all vanish).
///
/// Tuples are drawn from one representative per `{k, -k}` pair, which only
/// changes determinant signs, and repeated vectors are skipped because they
/// give zero determinants.
pub fn gcd_determinant(set: &FrequencySet) -> Result<u64, SaturationError> {
    let dim = set.dim();
    let reps = set.canonical_nonzero();
    let n = reps.len();
    if n < dim {
        return Ok(0);
    }
    let tuples = binomial(n as u128, dim as u128);
    if tuples > MAX_DETERMINANT_TUPLES {
        return Err(SaturationError::TooManyTuples(tuples));
    }
    let mut g: u128 = 0;
    let mut idx: Vec<usize> = (0..dim).collect();
    loop {
        let det = determinant(idx.iter().map(|&i| reps[i].components()).collect());
        g = gcd(g, det.unsigned_abs());
        if g == 1 {
            return Ok(1);
        }
        // Next combination in lexicographic order.
        let mut i = dim;
        loop {
            if i == 0 {
                return Ok(g as u64);
            }
            i -= 1;
            if idx[i] < n - dim + i {
                idx[i] += 1;
                for j in i + 1..dim {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Exact integer determinant by fraction-free (Bareiss) elimination.
fn determinant(cols: Vec<&[i64]>) -> i128 {
    let n = cols.len();
    let mut a: Vec<Vec<i128>> = (0..n).map(|i| (0..n).map(|j| cols[j][i] as i128).collect()).collect();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(dim: usize, vs: &[&[i64]]) -> FrequencySet {
        FrequencySet::symmetric(dim, vs.iter().map(|v| Frequency::new(v.to_vec()))).unwrap()
    }

    #[test]
    fn span_examples() {
        let cross = FrequencySet::cross(2);
        assert!(lattice_span(&cross).is_full_lattice());
        let even = set(1, &[&[2]]);
        let basis = lattice_span(&even);
        assert_eq!(basis.rows, vec![vec![2]]);
        assert!(basis.contains(&Frequency::from([-6])));
        assert!(!basis.contains(&Frequency::from([3])));
        let diag = set(2, &[&[1, 1], &[1, -1]]);
        let basis = lattice_span(&diag);
        assert_eq!(basis.index(), Some(2));
        assert!(!basis.contains(&Frequency::from([1, 0])));
        assert!(basis.contains(&Frequency::from([2, 0])));
        assert!(basis.contains(&Frequency::from([3, 1])));
    }

    #[test]
    fn span_matches_brute_force_enumeration() {
        // Integer combinations with coefficients in [-4, 4] of the index-2 example.
        let gens = [[1i64, 1], [1, -1]];
        let basis = lattice_span(&set(2, &[&gens[0], &gens[1]]));
        let mut reached = std::collections::BTreeSet::new();
        for a in -4i64..=4 {
            for b in -4i64..=4 {
                reached.insert([a * gens[0][0] + b * gens[1][0], a * gens[0][1] + b * gens[1][1]]);
            }
        }
        for x in -3i64..=3 {
            for y in -3i64..=3 {
                assert_eq!(basis.contains(&Frequency::from([x, y])), reached.contains(&[x, y]), "({x},{y})");
            }
        }
    }

    #[test]
    fn generator_examples() {
        for d in 1..=4 {
            assert!(is_generator(&FrequencySet::cross(d)));
        }
        assert!(!is_generator(&set(1, &[&[2]])));
        assert!(is_generator(&set(2, &[&[2, 0], &[0, 1], &[1, 1]])));
        assert!(is_generator(&set(1, &[&[2], &[3]])));
    }

    #[test]
    fn gcd_examples() {
        assert_eq!(gcd_determinant(&FrequencySet::cross(2)).unwrap(), 1);
        assert_eq!(gcd_determinant(&set(2, &[&[2, 0], &[0, 2]])).unwrap(), 4);
        assert_eq!(gcd_determinant(&set(2, &[&[1, 1], &[2, 2]])).unwrap(), 0);
        assert_eq!(gcd_determinant(&set(1, &[&[4], &[6]])).unwrap(), 2);
        assert_eq!(gcd_determinant(&set(3, &[&[1, 0, 0]])).unwrap(), 0);
    }

    #[test]
    fn bareiss_determinant() {
        let m: Vec<&[i64]> = vec![&[2, 0, 1], &[1, 3, 2], &[1, 1, 1]];
        // columns (2,0,1), (1,3,2), (1,1,1)
        // Cofactor expansion along the first row: 2 * 1 + 1 - 3.
        assert_eq!(determinant(m), 0);
    }
}
