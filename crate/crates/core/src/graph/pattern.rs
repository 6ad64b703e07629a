use crate::error::{Error, Result};

/// Lower-triangular sparsity pattern of an `n × n` symmetric matrix.
///
/// The public interface is 1-based: a pair `(i, j)` with `i ≥ j` names row
/// `i` and column `j`. Pairs are kept unique and sorted column-major (by
/// `j`, then `i`), which is the raster order used to vectorize matrices
/// supported on the pattern. Diagonal pairs are allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SparsityPattern {
    n: usize,
    colptr: Vec<usize>,
    rows: Vec<usize>,
}

impl SparsityPattern {
    /// Builds a pattern from 1-based pairs; `(i, j)` and `(j, i)` name the
    /// same entry and duplicates are merged.
    pub fn new<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (a, b) in pairs {
            if a == 0 || b == 0 || a > n || b > n {
                return Err(Error::MalformedPattern(format!(
                    "pair ({a}, {b}) out of range for order {n}"
                )));
            }
            let (i, j) = if a >= b { (a, b) } else { (b, a) };
            cols[j - 1].push(i - 1);
        }
        Ok(Self::from_columns0(n, cols))
    }

    pub fn empty(n: usize) -> Self {
        Self { n, colptr: vec![0; n + 1], rows: Vec::new() }
    }

    pub fn diagonal(n: usize) -> Self {
        Self { n, colptr: (0..=n).collect(), rows: (0..n).collect() }
    }

    /// The complete lower triangle, diagonal included.
    pub fn complete(n: usize) -> Self {
        Self::from_columns0(n, (0..n).map(|j| (j..n).collect()).collect())
    }

    /// `clique(J)` for a 1-based vertex set `J`.
    pub fn clique(n: usize, members: &[usize]) -> Result<Self> {
        let mut pairs = Vec::with_capacity(members.len() * (members.len() + 1) / 2);
        for (a, &u) in members.iter().enumerate() {
            for &v in &members[..=a] {
                pairs.push((u, v));
            }
        }
        Self::new(n, pairs)
    }

    /// Builds from 0-based columns; rows below the diagonal are kept as is,
    /// rows above are ignored. Sorting and deduplication happen here.
    pub(crate) fn from_columns0(n: usize, mut cols: Vec<Vec<usize>>) -> Self {
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rows = Vec::new();
        colptr.push(0);
        for (j, col) in cols.iter_mut().enumerate() {
            col.retain(|&i| i >= j);
            col.sort_unstable();
            col.dedup();
            rows.extend_from_slice(col);
            colptr.push(rows.len());
        }
        Self { n, colptr, rows }
    }

    /// Builds from already canonical 0-based compressed columns.
    pub(crate) fn from_raw0(n: usize, colptr: Vec<usize>, rows: Vec<usize>) -> Self {
        debug_assert_eq!(colptr.len(), n + 1);
        Self { n, colptr, rows }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Number of stored pairs, diagonal included.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_off_diagonal(&self) -> usize {
        (0..self.n).map(|j| self.col0(j).iter().filter(|&&i| i > j).count()).sum()
    }

    /// Stored pairs in raster order, 1-based.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |j| self.col0(j).iter().map(move |&i| (i + 1, j + 1)))
    }

    /// Rows stored in column `j` (1-based in and out).
    pub fn column(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.col0(j - 1).iter().map(|&i| i + 1)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        if i == 0 || j == 0 || i > self.n || j > self.n {
            return false;
        }
        let (i, j) = if i >= j { (i - 1, j - 1) } else { (j - 1, i - 1) };
        self.col0(j).binary_search(&i).is_ok()
    }

    /// Same pattern with every diagonal pair removed.
    pub fn off_diagonal(&self) -> Self {
        let cols = (0..self.n)
            .map(|j| self.col0(j).iter().copied().filter(|&i| i > j).collect())
            .collect();
        Self::from_columns0(self.n, cols)
    }

    /// Same pattern with every diagonal pair present.
    pub fn with_diagonal(&self) -> Self {
        let cols = (0..self.n)
            .map(|j| {
                let mut c = self.col0(j).to_vec();
                c.push(j);
                c
            })
            .collect();
        Self::from_columns0(self.n, cols)
    }

    pub fn has_full_diagonal(&self) -> bool {
        (0..self.n).all(|j| self.col0(j).first() == Some(&j))
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::OrderMismatch { expected: self.n, found: other.n });
        }
        let cols = (0..self.n)
            .map(|j| {
                let mut c = self.col0(j).to_vec();
                c.extend_from_slice(other.col0(j));
                c
            })
            .collect();
        Ok(Self::from_columns0(self.n, cols))
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.n == other.n
            && (0..self.n).all(|j| {
                let theirs = other.col0(j);
                self.col0(j).iter().all(|i| theirs.binary_search(i).is_ok())
            })
    }

    /// Off-diagonal parts are equal (diagonal pairs ignored).
    pub fn same_off_diagonal(&self, other: &Self) -> bool {
        self.off_diagonal() == other.off_diagonal()
    }

    /// The induced pattern `E[U]` for a 1-based vertex subset `U`, relabelled
    /// to `1..=|U|` in increasing vertex order.
    pub fn induced(&self, subset: &[usize]) -> Result<Self> {
        let mut u: Vec<usize> = subset.to_vec();
        u.sort_unstable();
        u.dedup();
        let mut label = vec![usize::MAX; self.n];
        for (k, &v) in u.iter().enumerate() {
            if v == 0 || v > self.n {
                return Err(Error::MalformedPattern(format!("vertex {v} out of range")));
            }
            label[v - 1] = k;
        }
        let mut cols = vec![Vec::new(); u.len()];
        for (k, &v) in u.iter().enumerate() {
            for &i in self.col0(v - 1) {
                if label[i] != usize::MAX {
                    cols[k].push(label[i]);
                }
            }
        }
        Ok(Self::from_columns0(u.len(), cols))
    }

    /// Maximum number of off-diagonal neighbours of any vertex.
    pub fn max_degree(&self) -> usize {
        self.adjacency0().iter().map(Vec::len).max().unwrap_or(0)
    }

    pub(crate) fn col0(&self, j: usize) -> &[usize] {
        &self.rows[self.colptr[j]..self.colptr[j + 1]]
    }

    pub(crate) fn colptr(&self) -> &[usize] {
        &self.colptr
    }

    pub(crate) fn rows0(&self) -> &[usize] {
        &self.rows
    }

    /// Symmetric 0-based adjacency lists without self loops, sorted.
    pub(crate) fn adjacency0(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for j in 0..self.n {
            for &i in self.col0(j) {
                if i != j {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// 0-based position of `(i, j)` (0-based, `i ≥ j`) in the row array.
    pub(crate) fn position0(&self, i: usize, j: usize) -> Option<usize> {
        self.col0(j).binary_search(&i).ok().map(|k| self.colptr[j] + k)
    }
}
