//! Left-looking sparse Cholesky on a fixed zero-fill pattern.

use crate::error::{Error, Result};
use crate::graph::SparsityPattern;

/// Numeric storage for `L` with `LLᵀ = H` on the pattern of `chol(H)`.
#[derive(Clone, Debug)]
pub(crate) struct SparseCholesky {
    n: usize,
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    // Row lists of L: for row j, the columns k < j with L[j,k] stored and
    // the position of that entry.
    rl_ptr: Vec<usize>,
    rl_pos: Vec<usize>,
    rl_col: Vec<usize>,
    pub(crate) values: Vec<f64>,
    work: Vec<f64>,
}

impl SparseCholesky {
    /// `pattern` must be zero-fill with every diagonal present.
    pub(crate) fn new(pattern: &SparsityPattern) -> Self {
        let n = pattern.order();
        let colptr = pattern.colptr().to_vec();
        let rowidx = pattern.rows0().to_vec();
        let mut counts = vec![0usize; n + 1];
        for j in 0..n {
            for &i in &rowidx[colptr[j] + 1..colptr[j + 1]] {
                counts[i + 1] += 1;
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let rl_ptr = counts.clone();
        let mut next = counts;
        let mut rl_pos = vec![0; rl_ptr[n]];
        let mut rl_col = vec![0; rl_ptr[n]];
        for j in 0..n {
            for p in colptr[j] + 1..colptr[j + 1] {
                let i = rowidx[p];
                rl_pos[next[i]] = p;
                rl_col[next[i]] = j;
                next[i] += 1;
            }
        }
        let nnz = rowidx.len();
        Self { n, colptr, rowidx, rl_ptr, rl_pos, rl_col, values: vec![0.0; nnz], work: vec![0.0; n] }
    }

    pub(crate) fn nnz(&self) -> usize {
        self.rowidx.len()
    }

    /// Position of the diagonal entry of column `j`.
    pub(crate) fn diag_pos(&self, j: usize) -> usize {
        self.colptr[j]
    }

    pub(crate) fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = (self.colptr[j], self.colptr[j + 1]);
        self.rowidx[a..b].binary_search(&i).ok().map(|k| a + k)
    }

    /// Factors in place; `values` must hold the lower triangle of `H`.
    pub(crate) fn factor(&mut self) -> Result<()> {
        let Self { n, colptr, rowidx, rl_ptr, rl_pos, rl_col, values, work } = self;
        for j in 0..*n {
            let (c0, c1) = (colptr[j], colptr[j + 1]);
            for p in c0..c1 {
                work[rowidx[p]] = values[p];
            }
            for t in rl_ptr[j]..rl_ptr[j + 1] {
                let pos = rl_pos[t];
                let k = rl_col[t];
                let ljk = values[pos];
                if ljk != 0.0 {
                    for q in pos..colptr[k + 1] {
                        work[rowidx[q]] -= values[q] * ljk;
                    }
                }
            }
            let d = work[j];
            if !(d > 0.0) || !d.is_finite() {
                for p in c0..c1 {
                    work[rowidx[p]] = 0.0;
                }
                return Err(Error::NotPositiveDefinite { pivot: j + 1 });
            }
            let ljj = d.sqrt();
            values[c0] = ljj;
            work[j] = 0.0;
            for p in c0 + 1..c1 {
                let i = rowidx[p];
                values[p] = work[i] / ljj;
                work[i] = 0.0;
            }
        }
        Ok(())
    }

    /// Solves `LLᵀx = b` in place.
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let (colptr, rowidx, values) = (&self.colptr, &self.rowidx, &self.values);
        for j in 0..self.n {
            let x = b[j] / values[colptr[j]];
            b[j] = x;
            for p in colptr[j] + 1..colptr[j + 1] {
                b[rowidx[p]] -= values[p] * x;
            }
        }
        for j in (0..self.n).rev() {
            let mut x = b[j];
            for p in colptr[j] + 1..colptr[j + 1] {
                x -= values[p] * b[rowidx[p]];
            }
            b[j] = x / values[colptr[j]];
        }
    }

    /// `y = Hx` for a symmetric `H` given by its lower triangle in `vals`.
    /// Loads `D·vals·D` into the factor storage.
    pub(crate) fn load_scaled(&mut self, vals: &[f64], d: &[f64]) {
        for j in 0..self.n {
            for p in self.colptr[j]..self.colptr[j + 1] {
                self.values[p] = d[self.rowidx[p]] * vals[p] * d[j];
            }
        }
    }

    pub(crate) fn sym_mul(&self, vals: &[f64], x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let p0 = self.colptr[j];
            y[j] += vals[p0] * x[j];
            for p in p0 + 1..self.colptr[j + 1] {
                let i = self.rowidx[p];
                y[i] += vals[p] * x[j];
                y[j] += vals[p] * x[i];
            }
        }
        y
    }
}
