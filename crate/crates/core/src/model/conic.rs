use crate::error::Result;
use crate::graph::{Permutation, SymbolicFactor};
use crate::lift::{aggregate_sparsity, clique_selectors, CliqueSelector, VecIndexer};
use crate::model::SdpProblem;

/// One cone of `𝒦`: a nonnegative orthant of some dimension or a PSD cone
/// of some order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    Orthant(usize),
    Psd(usize),
}

impl Cone {
    /// Length of the cone's vector representation.
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Orthant(m) => m,
            Cone::Psd(w) => w * (w + 1) / 2,
        }
    }

    /// Barrier parameter contribution.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Orthant(m) => m,
            Cone::Psd(w) => w,
        }
    }
}

/// A sparse column of `𝐀`: sorted 0-based positions and values.
#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct SparseCol {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

/// Standard-form data `(𝐀, 𝐛, 𝐜, 𝒦)` of the converted problem.
///
/// Primal: `min 𝐜ᵀx s.t. 𝐀x = 𝐛, x ∈ 𝒦`. Dual: `max 𝐛ᵀy s.t. 𝐜 − 𝐀ᵀy ∈ 𝒦`,
/// where `y = svec_F(Y)` and the dual is the clique-constrained SDP.
/// Columns of `𝐀` are `svec_F(Ã_r)` for each inequality row `r`, followed by
/// `−P_j` for each clique; `𝐛 = −svec_F(C̃)` and `𝐜 = (b, 0)`.
#[derive(Clone, Debug)]
pub struct ConicProgram {
    pub(crate) perm: Permutation,
    pub(crate) factor: SymbolicFactor,
    pub(crate) selectors: Vec<CliqueSelector>,
    pub(crate) a_cols: Vec<SparseCol>,
    pub(crate) b: Vec<f64>,
    pub(crate) c: Vec<f64>,
    /// Source constraint (0-based) and sign of each inequality row.
    pub(crate) rows: Vec<(usize, f64)>,
    pub(crate) psd_offsets: Vec<usize>,
}

/// Reorders the data by `Π`, factors the aggregate pattern, and assembles
/// the standard-form program.
pub fn build_conic(problem: &SdpProblem, perm: &Permutation) -> Result<ConicProgram> {
    problem.validate()?;
    let pp = problem.permuted(perm)?;
    let e = aggregate_sparsity(&pp)?;
    build_conic_with_factor(&pp, perm.clone(), SymbolicFactor::of(&e))
}

/// Same as [`build_conic`] for already reordered data and a given factor
/// that covers the aggregate pattern.
pub(crate) fn build_conic_with_factor(
    pp: &SdpProblem,
    perm: Permutation,
    factor: SymbolicFactor,
) -> Result<ConicProgram> {
    let ix = VecIndexer::new(&factor);
    let rows = pp.inequality_rows();
    let mut a_cols = Vec::with_capacity(rows.len());
    let mut c = Vec::with_capacity(rows.len());
    for &(i, sign) in &rows {
        let mut col: Vec<(usize, f64)> = Vec::with_capacity(pp.a[i].nnz());
        for (r, s, v) in pp.a[i].triplets() {
            let w = if r == s { v } else { std::f64::consts::SQRT_2 * v };
            col.push((ix.idx(r, s)? - 1, sign * w));
        }
        col.sort_by_key(|e| e.0);
        a_cols.push(SparseCol { idx: col.iter().map(|e| e.0).collect(), val: col.iter().map(|e| e.1).collect() });
        c.push(sign * pp.b[i]);
    }
    let b: Vec<f64> = ix.svec(&pp.c)?.into_iter().map(|v| -v).collect();
    let selectors = clique_selectors(&factor);
    let mut psd_offsets = Vec::with_capacity(selectors.len());
    let mut off = rows.len();
    for s in &selectors {
        psd_offsets.push(off);
        off += s.positions0().len();
    }
    c.resize(off, 0.0);
    Ok(ConicProgram { perm, factor, selectors, a_cols, b, c, rows, psd_offsets })
}

impl ConicProgram {
    /// `|F|`, the length of `y`.
    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    /// Length of `x`.
    pub fn num_cols(&self) -> usize {
        self.c.len()
    }

    /// Number of inequality rows `m'` (equalities count twice).
    pub fn num_ineq(&self) -> usize {
        self.a_cols.len()
    }

    /// Barrier parameter `m' + Σ ω_j`.
    pub fn barrier_degree(&self) -> usize {
        self.num_ineq() + self.selectors.iter().map(|s| s.size()).sum::<usize>()
    }

    pub fn cones(&self) -> Vec<Cone> {
        let mut k = vec![Cone::Orthant(self.num_ineq())];
        k.extend(self.selectors.iter().map(|s| Cone::Psd(s.size())));
        k
    }

    pub fn ordering(&self) -> &Permutation {
        &self.perm
    }

    pub fn factor(&self) -> &SymbolicFactor {
        &self.factor
    }

    pub fn selectors(&self) -> &[CliqueSelector] {
        &self.selectors
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Supports of the inequality columns, as 1-based positions.
    pub fn column_supports(&self) -> Vec<Vec<usize>> {
        self.a_cols.iter().map(|c| c.idx.iter().map(|p| p + 1).collect()).collect()
    }

    /// Column `k` of `𝐀` as `(row, value)` pairs, 0-based.
    pub fn column(&self, k: usize) -> Vec<(usize, f64)> {
        let m = self.num_ineq();
        if k < m {
            let col = &self.a_cols[k];
            col.idx.iter().copied().zip(col.val.iter().copied()).collect()
        } else {
            let j = self.psd_offsets.partition_point(|&o| o <= k) - 1;
            vec![(self.selectors[j].positions0()[k - self.psd_offsets[j]], -1.0)]
        }
    }

    /// `𝐀x`.
    pub fn a_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.num_rows()];
        for (col, &xi) in self.a_cols.iter().zip(x) {
            for (&p, &v) in col.idx.iter().zip(&col.val) {
                y[p] += v * xi;
            }
        }
        for (s, &off) in self.selectors.iter().zip(&self.psd_offsets) {
            for (k, &p) in s.positions0().iter().enumerate() {
                y[p] -= x[off + k];
            }
        }
        y
    }

    /// `𝐀ᵀy`.
    pub fn at_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.num_cols()];
        for (col, xi) in self.a_cols.iter().zip(x.iter_mut()) {
            *xi = col.idx.iter().zip(&col.val).map(|(&p, &v)| v * y[p]).sum();
        }
        for (s, &off) in self.selectors.iter().zip(&self.psd_offsets) {
            for (k, &p) in s.positions0().iter().enumerate() {
                x[off + k] = -y[p];
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SparseSym;
    use crate::model::Sense;

    fn dense_pair() -> SdpProblem {
        let c = SparseSym::new(2, [(1, 1, 1.0), (2, 2, 1.0)]).unwrap();
        let a = SparseSym::new(2, [(1, 1, 1.0), (2, 1, 0.5), (2, 2, 2.0)]).unwrap();
        SdpProblem::new(c, vec![a], vec![1.0], vec![Sense::Le]).unwrap()
    }

    #[test]
    fn column_count_for_full_order_two() {
        let cp = build_conic(&dense_pair(), &Permutation::identity(2)).unwrap();
        assert_eq!(cp.num_cols(), 1 + 3 + 1);
        assert_eq!(cp.cones(), vec![Cone::Orthant(1), Cone::Psd(2), Cone::Psd(1)]);
        assert_eq!(cp.barrier_degree(), 1 + 2 + 1);
    }

    #[test]
    fn diagonal_problem_is_a_linear_program() {
        let c = SparseSym::new(3, [(1, 1, 1.0), (2, 2, -1.0)]).unwrap();
        let a = SparseSym::new(3, [(1, 1, 1.0), (3, 3, 1.0)]).unwrap();
        let p = SdpProblem::new(c, vec![a.clone(), a], vec![1.0, 2.0], vec![Sense::Le, Sense::Eq]).unwrap();
        let cp = build_conic(&p, &Permutation::identity(3)).unwrap();
        assert_eq!(cp.cones(), vec![Cone::Orthant(3), Cone::Psd(1), Cone::Psd(1), Cone::Psd(1)]);
        assert_eq!(cp.c()[..3], [1.0, 2.0, -2.0]);
    }

    #[test]
    fn adjoint_matches() {
        let cp = build_conic(&dense_pair(), &Permutation::identity(2)).unwrap();
        let x: Vec<f64> = (0..cp.num_cols()).map(|k| 0.3 * k as f64 - 0.7).collect();
        let y: Vec<f64> = (0..cp.num_rows()).map(|k| 1.1 - 0.4 * k as f64).collect();
        let lhs: f64 = cp.a_mul(&x).iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = cp.at_mul(&y).iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-13);
    }
}
