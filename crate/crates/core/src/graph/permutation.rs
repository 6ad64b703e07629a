use crate::error::{Error, Result};

/// A bijection on `{1..n}` mapping each vertex to its elimination position.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    pos: Vec<usize>,
    inv: Vec<usize>,
}

impl Permutation {
    /// Builds from the forward map, `forward[v-1] = π(v)` (1-based).
    pub fn new(forward: &[usize]) -> Result<Self> {
        let n = forward.len();
        let mut inv = vec![usize::MAX; n];
        for (v, &p) in forward.iter().enumerate() {
            if p == 0 || p > n || inv[p - 1] != usize::MAX {
                return Err(Error::InvalidArgument(format!(
                    "forward map is not a bijection at vertex {}",
                    v + 1
                )));
            }
            inv[p - 1] = v;
        }
        Ok(Self { pos: forward.iter().map(|p| p - 1).collect(), inv })
    }

    /// Builds from an elimination order: `order[k]` is the vertex placed at
    /// position `k+1`.
    pub fn from_order(order: &[usize]) -> Result<Self> {
        let n = order.len();
        let mut forward = vec![0; n];
        for (k, &v) in order.iter().enumerate() {
            if v == 0 || v > n || forward[v - 1] != 0 {
                return Err(Error::InvalidArgument(format!("order repeats or skips vertex {v}")));
            }
            forward[v - 1] = k + 1;
        }
        Self::new(&forward)
    }

    pub(crate) fn from_order0(order: Vec<usize>) -> Self {
        let mut pos = vec![0; order.len()];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        Self { pos, inv: order }
    }

    pub fn identity(n: usize) -> Self {
        Self { pos: (0..n).collect(), inv: (0..n).collect() }
    }

    /// `v ↦ n + 1 − v`.
    pub fn reversal(n: usize) -> Self {
        Self::from_order0((0..n).rev().collect())
    }

    pub fn order(&self) -> usize {
        self.pos.len()
    }

    /// Position of vertex `v` (1-based).
    pub fn apply(&self, v: usize) -> usize {
        self.pos[v - 1] + 1
    }

    /// Vertex at position `p` (1-based).
    pub fn vertex_at(&self, p: usize) -> usize {
        self.inv[p - 1] + 1
    }

    pub fn inverse(&self) -> Self {
        Self { pos: self.inv.clone(), inv: self.pos.clone() }
    }

    pub fn is_identity(&self) -> bool {
        self.pos.iter().enumerate().all(|(v, &p)| v == p)
    }

    /// Forward map as a 1-based vector.
    pub fn forward(&self) -> Vec<usize> {
        self.pos.iter().map(|p| p + 1).collect()
    }

    /// Elimination order as 1-based vertices.
    pub fn elimination_order(&self) -> Vec<usize> {
        self.inv.iter().map(|v| v + 1).collect()
    }

    pub(crate) fn pos0(&self) -> &[usize] {
        &self.pos
    }
}
