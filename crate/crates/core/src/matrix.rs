//! Sparse symmetric matrices stored as lower-triangular triplets.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Permutation, SparsityPattern};

/// Symmetric `n × n` matrix given by its lower-triangular entries.
///
/// Indices are 1-based at the interface. Entries `(i, j)` and `(j, i)` name
/// the same element; duplicates are summed. Explicitly stored zeros are
/// kept and count as structural nonzeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SparseSymRaw", into = "SparseSymRaw")]
pub struct SparseSym {
    n: usize,
    // (row, col, value), 0-based, row >= col, sorted column-major, unique.
    entries: Vec<(usize, usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct SparseSymRaw {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TryFrom<SparseSymRaw> for SparseSym {
    type Error = Error;
    fn try_from(r: SparseSymRaw) -> Result<Self> {
        SparseSym::new(r.n, r.entries)
    }
}

impl From<SparseSym> for SparseSymRaw {
    fn from(s: SparseSym) -> Self {
        SparseSymRaw { n: s.n, entries: s.triplets().collect() }
    }
}

impl SparseSym {
    pub fn new<I>(n: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries = Vec::new();
        for (a, b, v) in triplets {
            if a == 0 || b == 0 || a > n || b > n {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({a}, {b}) out of range for order {n}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite entry at ({a}, {b})")));
            }
            let (i, j) = if a >= b { (a - 1, b - 1) } else { (b - 1, a - 1) };
            entries.push((i, j, v));
        }
        Ok(Self::from_entries0(n, entries))
    }

    pub(crate) fn from_entries0(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by_key(|&(i, j, _)| (j, i));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        Self { n, entries: merged }
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self { n, entries: (0..n).map(|i| (i, i, 1.0)).collect() }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Number of stored lower-triangular entries.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Stored entries `(i, j, v)` with `i ≥ j`, 1-based.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|&(i, j, v)| (i + 1, j + 1, v))
    }

    pub(crate) fn entries0(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i - 1, j - 1) } else { (j - 1, i - 1) };
        self.entries
            .binary_search_by_key(&(j, i), |&(r, c, _)| (c, r))
            .map(|k| self.entries[k].2)
            .unwrap_or(0.0)
    }

    /// `spar(·)`: the stored pattern, diagonal pairs included when stored.
    pub fn pattern(&self) -> SparsityPattern {
        let mut cols = vec![Vec::new(); self.n];
        for &(i, j, _) in &self.entries {
            cols[j].push(i);
        }
        SparsityPattern::from_columns0(self.n, cols)
    }

    /// Sorted 1-based vertices touched by some stored entry.
    pub fn support(&self) -> Vec<usize> {
        self.support0().into_iter().map(|v| v + 1).collect()
    }

    pub(crate) fn support0(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.entries.iter().flat_map(|&(i, j, _)| [i, j]).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.2.abs()))
    }

    pub fn is_numerically_zero(&self) -> bool {
        self.entries.iter().all(|e| e.2 == 0.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * v } else { 2.0 * v * v })
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { n: self.n, entries: self.entries.iter().map(|&(i, j, v)| (i, j, alpha * v)).collect() }
    }

    /// `⟨A, X⟩` against a dense symmetric matrix.
    pub fn inner_dense(&self, x: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * x[(i, i)] } else { v * (x[(i, j)] + x[(j, i)]) })
            .sum()
    }

    /// `⟨A, UUᵀ⟩` for a dense factor `U` with `n` rows.
    pub fn inner_factor(&self, u: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| {
                let d = u.row(i).dot(&u.row(j));
                if i == j {
                    v * d
                } else {
                    2.0 * v * d
                }
            })
            .sum()
    }

    /// `⟨A, B⟩` between two sparse symmetric matrices.
    pub fn inner(&self, other: &SparseSym) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut s = 0.0;
        while a < self.entries.len() && b < other.entries.len() {
            let (i, j, v) = self.entries[a];
            let (k, l, w) = other.entries[b];
            match (j, i).cmp(&(l, k)) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    s += if i == j { v * w } else { 2.0 * v * w };
                    a += 1;
                    b += 1;
                }
            }
        }
        s
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        self.add_to_dense(&mut m, 1.0);
        m
    }

    /// `M += alpha · A`.
    pub fn add_to_dense(&self, m: &mut DMatrix<f64>, alpha: f64) {
        for &(i, j, v) in &self.entries {
            m[(i, j)] += alpha * v;
            if i != j {
                m[(j, i)] += alpha * v;
            }
        }
    }

    /// `ΠAΠᵀ`: entry `(i, j)` moves to `(π(i), π(j))`.
    pub fn permuted(&self, p: &Permutation) -> Self {
        let pos = p.pos0();
        Self::from_entries0(
            self.n,
            self.entries
                .iter()
                .map(|&(i, j, v)| {
                    let (a, b) = (pos[i], pos[j]);
                    if a >= b {
                        (a, b, v)
                    } else {
                        (b, a, v)
                    }
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_sum_and_mirror() {
        let a = SparseSym::new(3, [(1, 2, 1.0), (2, 1, 2.0), (3, 3, 4.0)]).unwrap();
        assert_eq!(a.get(1, 2), 3.0);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.support(), vec![1, 2, 3]);
    }

    #[test]
    fn inner_products_agree() {
        let a = SparseSym::new(3, [(2, 1, 1.5), (3, 3, -2.0), (1, 1, 0.5)]).unwrap();
        let b = SparseSym::new(3, [(2, 1, 2.0), (3, 3, 1.0), (3, 2, 7.0)]).unwrap();
        let want = (a.to_dense().component_mul(&b.to_dense())).sum();
        assert!((a.inner(&b) - want).abs() < 1e-14);
        assert!((a.inner_dense(&b.to_dense()) - want).abs() < 1e-14);
        let u = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 0.0]);
        let x = &u * u.transpose();
        assert!((a.inner_factor(&u) - a.inner_dense(&x)).abs() < 1e-13);
    }

    #[test]
    fn permutation_moves_entries() {
        let a = SparseSym::new(3, [(2, 1, 5.0)]).unwrap();
        let p = Permutation::new(&[3, 1, 2]).unwrap();
        assert_eq!(a.permuted(&p).get(3, 1), 5.0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(SparseSym::new(2, [(3, 1, 1.0)]).is_err());
        assert!(SparseSym::new(2, [(1, 1, f64::NAN)]).is_err());
    }
}
