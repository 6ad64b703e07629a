use std::collections::BTreeSet;

use super::{Permutation, SparsityPattern};

/// Greedy minimum-degree ordering on the explicit elimination graph.
///
/// Degrees are exact; ties go to the lowest vertex index.
pub fn min_degree_order(e: &SparsityPattern) -> Permutation {
    let n = e.order();
    let mut adj = e.adjacency0();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (adj[v].len(), v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut scratch = Vec::new();
    while let Some((_, v)) = queue.pop_first() {
        order.push(v);
        let nbrs = std::mem::take(&mut adj[v]);
        for &u in &nbrs {
            queue.remove(&(adj[u].len(), u));
            merge_clique(&adj[u], &nbrs, u, v, &mut scratch);
            std::mem::swap(&mut adj[u], &mut scratch);
            queue.insert((adj[u].len(), u));
        }
    }
    Permutation::from_order0(order)
}

/// `out = (a ∪ b) \ {u, v}` for sorted `a`, `b`.
fn merge_clique(a: &[usize], b: &[usize], u: usize, v: usize, out: &mut Vec<usize>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        if x != u && x != v {
            out.push(x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{frontsize, permute};

    fn omega_after(e: &SparsityPattern) -> usize {
        frontsize(&permute(e, &min_degree_order(e)).unwrap())
    }

    #[test]
    fn complete_graph_is_dense_anyway() {
        assert_eq!(omega_after(&SparsityPattern::complete(6)), 6);
    }

    #[test]
    fn star_center_first_gets_width_two() {
        let e = SparsityPattern::new(5, (2..=5).map(|i| (i, 1))).unwrap();
        assert_eq!(omega_after(&e), 2);
    }

    #[test]
    fn path_has_frontsize_two() {
        let e = SparsityPattern::new(8, (2..=8).map(|i| (i, i - 1))).unwrap();
        assert_eq!(omega_after(&e), 2);
    }

    #[test]
    fn deterministic_tie_break() {
        let e = SparsityPattern::empty(4);
        assert!(min_degree_order(&e).is_identity());
    }
}
