use super::{Permutation, SparsityPattern};
use crate::error::{Error, Result};

/// Symbolic Cholesky factor `chol(E)`, all diagonals included.
///
/// Columns are built through the elimination tree: column `j` is `{j}`, the
/// lower neighbours of `j`, and the column sets of its children minus the
/// children themselves. Time and memory are `O(|F|)`.
pub fn symbolic_cholesky(e: &SparsityPattern) -> SparsityPattern {
    let n = e.order();
    let mut colptr = Vec::with_capacity(n + 1);
    let mut rows: Vec<usize> = Vec::with_capacity(e.len() + n);
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut mark = vec![usize::MAX; n];
    colptr.push(0);
    for j in 0..n {
        let start = rows.len();
        rows.push(j);
        mark[j] = j;
        for &i in e.col0(j) {
            if mark[i] != j {
                mark[i] = j;
                rows.push(i);
            }
        }
        for &c in &children[j] {
            let (a, b) = (colptr[c], colptr[c + 1]);
            for k in a + 1..b {
                let i = rows[k];
                if mark[i] != j {
                    mark[i] = j;
                    rows.push(i);
                }
            }
        }
        rows[start..].sort_unstable();
        if rows.len() - start > 1 {
            children[rows[start + 1]].push(j);
        }
        colptr.push(rows.len());
    }
    SparsityPattern::from_raw0(n, colptr, rows)
}

/// Frontsize `ω(E)`: largest column of `chol(E)`.
pub fn frontsize(e: &SparsityPattern) -> usize {
    let f = symbolic_cholesky(e);
    (0..f.order()).map(|j| f.col0(j).len()).max().unwrap_or(0)
}

/// `E_Π`: the pattern of `ΠSΠᵀ` for `spar(S) = E`.
pub fn permute(e: &SparsityPattern, p: &Permutation) -> Result<SparsityPattern> {
    if e.order() != p.order() {
        return Err(Error::OrderMismatch { expected: e.order(), found: p.order() });
    }
    let n = e.order();
    let pos = p.pos0();
    let mut cols = vec![Vec::new(); n];
    for j in 0..n {
        for &i in e.col0(j) {
            let (a, b) = (pos[i], pos[j]);
            if a >= b {
                cols[b].push(a);
            } else {
                cols[a].push(b);
            }
        }
    }
    Ok(SparsityPattern::from_columns0(n, cols))
}

/// A zero-fill pattern with its column sets and elimination-tree parents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicFactor {
    pattern: SparsityPattern,
    parent: Vec<Option<usize>>,
    frontsize: usize,
}

impl SymbolicFactor {
    /// `chol(E)` wrapped as a factor.
    pub fn of(e: &SparsityPattern) -> Self {
        Self::build(symbolic_cholesky(e))
    }

    /// Wraps an existing pattern; fails unless it is zero-fill with every
    /// diagonal present.
    pub fn new(f: SparsityPattern) -> Result<Self> {
        if !f.has_full_diagonal() {
            return Err(Error::MalformedPattern("factor is missing a diagonal pair".into()));
        }
        if symbolic_cholesky(&f) != f {
            return Err(Error::MalformedPattern("pattern is not zero-fill".into()));
        }
        Ok(Self::build(f))
    }

    fn build(pattern: SparsityPattern) -> Self {
        let n = pattern.order();
        let parent = (0..n).map(|j| pattern.col0(j).get(1).copied()).collect();
        let frontsize = (0..n).map(|j| pattern.col0(j).len()).max().unwrap_or(0);
        Self { pattern, parent, frontsize }
    }

    pub fn order(&self) -> usize {
        self.pattern.order()
    }

    pub fn pattern(&self) -> &SparsityPattern {
        &self.pattern
    }

    pub fn frontsize(&self) -> usize {
        self.frontsize
    }

    /// `J_j = col_F(j)`, 1-based.
    pub fn colset(&self, j: usize) -> Vec<usize> {
        self.pattern.column(j).collect()
    }

    pub fn colsize(&self, j: usize) -> usize {
        self.pattern.col0(j - 1).len()
    }

    /// `p(j)`, or `None` for a singleton column.
    pub fn parent(&self, j: usize) -> Option<usize> {
        self.parent[j - 1].map(|p| p + 1)
    }

    /// Sum of `ω_j(ω_j+1)/2` over all columns.
    pub fn lifted_size(&self) -> usize {
        (0..self.order()).map(|j| {
            let w = self.pattern.col0(j).len();
            w * (w + 1) / 2
        }).sum()
    }

    pub(crate) fn col0(&self, j: usize) -> &[usize] {
        self.pattern.col0(j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star_first() -> SparsityPattern {
        SparsityPattern::new(4, [(2, 1), (3, 1), (4, 1)]).unwrap()
    }

    fn star_last() -> SparsityPattern {
        SparsityPattern::new(4, [(4, 1), (4, 2), (4, 3)]).unwrap()
    }

    #[test]
    fn no_edges_no_fill() {
        assert_eq!(symbolic_cholesky(&SparsityPattern::empty(3)), SparsityPattern::diagonal(3));
    }

    #[test]
    fn star_center_first_fills_in() {
        assert_eq!(symbolic_cholesky(&star_first()), SparsityPattern::complete(4));
        assert_eq!(frontsize(&star_first()), 4);
    }

    #[test]
    fn star_center_last_has_zero_fill() {
        let f = symbolic_cholesky(&star_last());
        assert_eq!(f, star_last().with_diagonal());
        assert_eq!(frontsize(&star_last()), 2);
    }

    #[test]
    fn diagonal_frontsize_is_one() {
        assert_eq!(frontsize(&SparsityPattern::diagonal(7)), 1);
    }

    #[test]
    fn reversal_turns_star_around() {
        let p = permute(&star_first(), &Permutation::reversal(4)).unwrap();
        assert_eq!(p, star_last());
        assert_eq!(frontsize(&p), 2);
        assert_eq!(permute(&star_first(), &Permutation::identity(4)).unwrap(), star_first());
    }

    #[test]
    fn factor_parents_and_colsets() {
        let f = SymbolicFactor::of(&star_last());
        assert_eq!(f.colset(1), vec![1, 4]);
        assert_eq!(f.parent(1), Some(4));
        assert_eq!(f.parent(4), None);
        assert_eq!(f.frontsize(), 2);
        assert!(SymbolicFactor::new(star_first().with_diagonal()).is_err());
    }
}
