use crate::error::{Error, Result};
use crate::graph::SymbolicFactor;
use crate::matrix::SparseSym;

/// `idx_F` and `svec_F` for a factor pattern `F`.
///
/// Positions follow column-stacking raster order; off-diagonal entries are
/// scaled by `√2` so that `⟨svec_F(X), svec_F(Y)⟩ = ⟨X, Y⟩`.
#[derive(Clone, Debug)]
pub struct VecIndexer<'a> {
    f: &'a SymbolicFactor,
}

impl<'a> VecIndexer<'a> {
    pub fn new(f: &'a SymbolicFactor) -> Self {
        Self { f }
    }

    /// `|F|`.
    pub fn len(&self) -> usize {
        self.f.pattern().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// 1-based position of `(i, j)` (either order).
    pub fn idx(&self, i: usize, j: usize) -> Result<usize> {
        let n = self.f.order();
        if i == 0 || j == 0 || i > n || j > n {
            return Err(Error::NotInPattern { row: i, col: j });
        }
        let (r, c) = if i >= j { (i - 1, j - 1) } else { (j - 1, i - 1) };
        self.f.pattern().position0(r, c).map(|p| p + 1).ok_or(Error::NotInPattern { row: i, col: j })
    }

    pub fn svec(&self, x: &SparseSym) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        for (i, j, v) in x.triplets() {
            let p = self.idx(i, j)? - 1;
            out[p] = if i == j { v } else { std::f64::consts::SQRT_2 * v };
        }
        Ok(out)
    }

    /// Inverse of [`svec`](Self::svec); zeros are not stored.
    pub fn smat(&self, x: &[f64]) -> Result<SparseSym> {
        if x.len() != self.len() {
            return Err(Error::DimensionMismatch(format!("vector length {} vs |F| = {}", x.len(), self.len())));
        }
        Ok(SparseSym::from_entries0(self.f.order(), self.smat_entries0(x)))
    }

    /// Every pair of `F` with its value, zeros included, 0-based.
    pub(crate) fn smat_entries0(&self, x: &[f64]) -> Vec<(usize, usize, f64)> {
        let p = self.f.pattern();
        let mut out = Vec::with_capacity(p.len());
        for j in 0..p.order() {
            let base = p.colptr()[j];
            for (k, &i) in p.col0(j).iter().enumerate() {
                let v = x[base + k];
                out.push((i, j, if i == j { v } else { v / std::f64::consts::SQRT_2 }));
            }
        }
        out
    }
}

/// `P_j`: picks `svec(Y[J_j, J_j])` out of `svec_F(Y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliqueSelector {
    j: usize,
    members: Vec<usize>,
    positions: Vec<usize>,
}

impl CliqueSelector {
    /// Clique index `j`, 1-based.
    pub fn index(&self) -> usize {
        self.j + 1
    }

    /// `J_j`, 1-based.
    pub fn members(&self) -> Vec<usize> {
        self.members.iter().map(|v| v + 1).collect()
    }

    /// `ω_j`.
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// `supp(P_j)` as 1-based positions, in local svec order.
    pub fn support(&self) -> Vec<usize> {
        self.positions.iter().map(|p| p + 1).collect()
    }

    pub(crate) fn members0(&self) -> &[usize] {
        &self.members
    }

    pub(crate) fn positions0(&self) -> &[usize] {
        &self.positions
    }

    /// `P_jᵀ y`.
    pub fn gather(&self, y: &[f64]) -> Vec<f64> {
        self.positions.iter().map(|&p| y[p]).collect()
    }

    /// `y += P_j z`.
    pub fn scatter_add(&self, z: &[f64], y: &mut [f64]) {
        for (&p, &v) in self.positions.iter().zip(z) {
            y[p] += v;
        }
    }
}

/// One selector per column of `F`.
pub fn clique_selectors(f: &SymbolicFactor) -> Vec<CliqueSelector> {
    let p = f.pattern();
    (0..f.order())
        .map(|j| {
            let members = f.col0(j).to_vec();
            let w = members.len();
            let mut positions = Vec::with_capacity(w * (w + 1) / 2);
            for b in 0..w {
                for &ra in &members[b..] {
                    positions.push(p.position0(ra, members[b]).expect("column sets of a zero-fill pattern are cliques"));
                }
            }
            CliqueSelector { j, members, positions }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SparsityPattern;

    fn star_last() -> SymbolicFactor {
        SymbolicFactor::of(&SparsityPattern::new(4, [(4, 1), (4, 2), (4, 3)]).unwrap())
    }

    #[test]
    fn full_order_two() {
        let f = SymbolicFactor::of(&SparsityPattern::complete(2));
        let ix = VecIndexer::new(&f);
        assert_eq!((ix.idx(1, 1).unwrap(), ix.idx(2, 1).unwrap(), ix.idx(2, 2).unwrap()), (1, 2, 3));
        let x = SparseSym::new(2, [(1, 1, 1.0), (2, 1, 2.0), (2, 2, 3.0)]).unwrap();
        let v = ix.svec(&x).unwrap();
        assert_eq!(v, vec![1.0, 2.0 * std::f64::consts::SQRT_2, 3.0]);
        assert!((ix.smat(&v).unwrap().get(2, 1) - 2.0).abs() < 1e-15);
        let sel = clique_selectors(&f);
        assert_eq!(sel[0].support(), vec![1, 2, 3]);
        assert_eq!(sel[1].support(), vec![3]);
    }

    #[test]
    fn star_positions() {
        let f = star_last();
        let ix = VecIndexer::new(&f);
        assert_eq!(ix.idx(4, 1).unwrap(), 2);
        assert_eq!(ix.idx(4, 3).unwrap(), 6);
        assert!(ix.idx(2, 1).is_err());
    }

    #[test]
    fn diagonal_positions_and_selectors() {
        let f = SymbolicFactor::of(&SparsityPattern::empty(4));
        let ix = VecIndexer::new(&f);
        for k in 1..=4 {
            assert_eq!(ix.idx(k, k).unwrap(), k);
        }
        let sel = clique_selectors(&f);
        for (k, s) in sel.iter().enumerate() {
            assert_eq!(s.support(), vec![k + 1]);
        }
    }

    #[test]
    fn identity_svec() {
        let f = star_last();
        let v = VecIndexer::new(&f).svec(&SparseSym::identity(4)).unwrap();
        assert_eq!(v, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_entry_outside_pattern() {
        let f = star_last();
        let x = SparseSym::new(4, [(2, 1, 1.0)]).unwrap();
        assert!(matches!(VecIndexer::new(&f).svec(&x), Err(Error::NotInPattern { .. })));
    }
}
