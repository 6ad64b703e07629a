use std::collections::VecDeque;

use super::{Permutation, SparsityPattern, SymbolicFactor};
use crate::error::{Error, Result};

/// Bags over 1-based vertices joined by a tree over 1-based bag indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<usize>>,
    pub edges: Vec<(usize, usize)>,
}

/// First condition found to fail, with a witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TdViolation {
    NotATree,
    VertexUncovered(usize),
    EdgeUncovered(usize, usize),
    /// `vertex` lies in bags `a` and `b` but not in bag `via` on the path.
    RunningIntersection { vertex: usize, a: usize, b: usize, via: usize },
}

impl TreeDecomposition {
    pub fn new(bags: Vec<Vec<usize>>, edges: Vec<(usize, usize)>) -> Self {
        let bags = bags
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b.dedup();
                b
            })
            .collect();
        Self { bags, edges }
    }

    /// `max |J_j| − 1`.
    pub fn width(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(1).saturating_sub(1)
    }

    /// 0-based adjacency over bags, or `None` if the edges do not form a tree.
    fn tree_adjacency(&self) -> Option<Vec<Vec<usize>>> {
        let nb = self.bags.len();
        if nb == 0 || self.edges.len() + 1 != nb {
            return None;
        }
        let mut adj = vec![Vec::new(); nb];
        for &(a, b) in &self.edges {
            if a == 0 || b == 0 || a > nb || b > nb || a == b {
                return None;
            }
            adj[a - 1].push(b - 1);
            adj[b - 1].push(a - 1);
        }
        let mut seen = vec![false; nb];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        (count == nb).then_some(adj)
    }
}

/// Bags `J_j = col_F(j)` with edges `(j, p(j))`; singleton columns other than
/// the last hang from bag `n`.
pub fn tree_decomposition_of_factor(f: &SymbolicFactor) -> TreeDecomposition {
    let n = f.order();
    let bags = (1..=n).map(|j| f.colset(j)).collect();
    let edges = (1..n).map(|j| (j, f.parent(j).unwrap_or(n))).collect();
    TreeDecomposition { bags, edges }
}

/// Checks the tree shape, vertex cover, edge cover, and running intersection
/// of `td` against graph `g`. Returns `Ok(())` or the first violation.
pub fn verify_tree_decomposition(
    td: &TreeDecomposition,
    g: &SparsityPattern,
) -> std::result::Result<(), TdViolation> {
    let adj = td.tree_adjacency().ok_or(TdViolation::NotATree)?;
    let n = g.order();
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, bag) in td.bags.iter().enumerate() {
        for &v in bag {
            if v >= 1 && v <= n {
                holders[v - 1].push(k);
            }
        }
    }
    if let Some(v) = (0..n).find(|&v| holders[v].is_empty()) {
        return Err(TdViolation::VertexUncovered(v + 1));
    }
    for (i, j) in g.pairs() {
        if i != j {
            let hj = &holders[j - 1];
            let covered = holders[i - 1].iter().any(|k| hj.binary_search(k).is_ok());
            if !covered {
                return Err(TdViolation::EdgeUncovered(i, j));
            }
        }
    }
    let nb = td.bags.len();
    let mut inset = vec![false; nb];
    let mut seen = vec![false; nb];
    for v in 0..n {
        let h = &holders[v];
        for &k in h {
            inset[k] = true;
        }
        let mut stack = vec![h[0]];
        seen[h[0]] = true;
        let mut reached = vec![h[0]];
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if inset[y] && !seen[y] {
                    seen[y] = true;
                    reached.push(y);
                    stack.push(y);
                }
            }
        }
        let missing = h.iter().copied().find(|&k| !seen[k]);
        for &k in &reached {
            seen[k] = false;
        }
        for &k in h {
            inset[k] = false;
        }
        if let Some(b) = missing {
            let a = h[0];
            let path = tree_path(&adj, a, b);
            let via = path
                .into_iter()
                .find(|&k| td.bags[k].binary_search(&(v + 1)).is_err())
                .unwrap_or(b);
            return Err(TdViolation::RunningIntersection {
                vertex: v + 1,
                a: a + 1,
                b: b + 1,
                via: via + 1,
            });
        }
    }
    Ok(())
}

fn tree_path(adj: &[Vec<usize>], a: usize, b: usize) -> Vec<usize> {
    let mut prev = vec![usize::MAX; adj.len()];
    let mut queue = VecDeque::from([a]);
    prev[a] = a;
    while let Some(x) = queue.pop_front() {
        if x == b {
            break;
        }
        for &y in &adj[x] {
            if prev[y] == usize::MAX {
                prev[y] = x;
                queue.push_back(y);
            }
        }
    }
    let mut path = vec![b];
    let mut x = b;
    while x != a {
        x = prev[x];
        path.push(x);
    }
    path.reverse();
    path
}

/// Elimination ordering whose frontsize on any graph covered by `td` is at
/// most `1 + width(td)`.
///
/// The tree is rooted at its last bag. Each vertex is numbered by the
/// post-order position of the bag closest to the root that contains it;
/// ties go to the lower vertex.
pub fn peo_from_tree_decomposition(td: &TreeDecomposition) -> Result<Permutation> {
    let adj = td
        .tree_adjacency()
        .ok_or_else(|| Error::InvalidDecomposition("bag edges do not form a tree".into()))?;
    let n = td.bags.iter().flatten().copied().max().unwrap_or(0);
    let nb = td.bags.len();
    let root = nb - 1;
    // Preorder gives each vertex its top-most bag; postorder numbers bags.
    let mut top = vec![usize::MAX; n];
    let mut post = vec![0usize; nb];
    let mut counter = 0;
    let mut stack = vec![(root, usize::MAX, false)];
    while let Some((x, from, done)) = stack.pop() {
        if done {
            post[x] = counter;
            counter += 1;
            continue;
        }
        for &v in &td.bags[x] {
            if v == 0 {
                return Err(Error::InvalidDecomposition("vertex 0 in a bag".into()));
            }
            if top[v - 1] == usize::MAX {
                top[v - 1] = x;
            }
        }
        stack.push((x, from, true));
        for &y in adj[x].iter().rev() {
            if y != from {
                stack.push((y, x, false));
            }
        }
    }
    if let Some(v) = top.iter().position(|&t| t == usize::MAX) {
        return Err(Error::InvalidDecomposition(format!("vertex {} is in no bag", v + 1)));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (post[top[v]], v));
    Ok(Permutation::from_order0(order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{frontsize, permute, symbolic_cholesky};

    #[test]
    fn diagonal_factor_gives_singletons() {
        let f = SymbolicFactor::of(&SparsityPattern::empty(3));
        let td = tree_decomposition_of_factor(&f);
        assert_eq!(td.bags, vec![vec![1], vec![2], vec![3]]);
        assert_eq!(td.width(), 0);
        assert!(verify_tree_decomposition(&td, &SparsityPattern::empty(3)).is_ok());
    }

    #[test]
    fn star_last_bags() {
        let e = SparsityPattern::new(4, [(4, 1), (4, 2), (4, 3)]).unwrap();
        let td = tree_decomposition_of_factor(&SymbolicFactor::of(&e));
        assert_eq!(td.bags, vec![vec![1, 4], vec![2, 4], vec![3, 4], vec![4]]);
        assert_eq!(td.width(), 1);
        assert!(verify_tree_decomposition(&td, &e).is_ok());
    }

    #[test]
    fn complete_factor_width() {
        let td = tree_decomposition_of_factor(&SymbolicFactor::of(&SparsityPattern::complete(4)));
        assert!(td.bags.contains(&vec![1, 2, 3, 4]));
        assert_eq!(td.width(), 3);
    }

    #[test]
    fn uncovered_edge_reported() {
        let td = TreeDecomposition::new(vec![vec![1, 2], vec![2, 3]], vec![(1, 2)]);
        let g = SparsityPattern::new(3, [(2, 1), (3, 1), (3, 2)]).unwrap();
        assert_eq!(verify_tree_decomposition(&td, &g), Err(TdViolation::EdgeUncovered(3, 1)));
    }

    #[test]
    fn running_intersection_reported() {
        let td = TreeDecomposition::new(vec![vec![1, 2], vec![3], vec![1, 3]], vec![(1, 2), (2, 3)]);
        let r = verify_tree_decomposition(&td, &SparsityPattern::empty(3));
        assert_eq!(r, Err(TdViolation::RunningIntersection { vertex: 1, a: 1, b: 3, via: 2 }));
    }

    #[test]
    fn star_decomposition_peo_puts_center_last() {
        let td = TreeDecomposition::new(
            vec![vec![1, 2], vec![1, 3], vec![1, 4], vec![1]],
            vec![(1, 4), (2, 4), (3, 4)],
        );
        let p = peo_from_tree_decomposition(&td).unwrap();
        assert_eq!(p.apply(1), 4);
        let e = SparsityPattern::new(4, [(2, 1), (3, 1), (4, 1)]).unwrap();
        assert_eq!(frontsize(&permute(&e, &p).unwrap()), 2);
    }

    #[test]
    fn width_zero_peo() {
        let td = TreeDecomposition::new(vec![vec![1], vec![2], vec![3]], vec![(1, 3), (2, 3)]);
        let p = peo_from_tree_decomposition(&td).unwrap();
        assert_eq!(frontsize(&permute(&SparsityPattern::empty(3), &p).unwrap()), 1);
    }

    #[test]
    fn peo_of_factor_decomposition_keeps_pattern() {
        let e = SparsityPattern::new(5, [(3, 1), (5, 2), (4, 3), (5, 4)]).unwrap();
        let f = SymbolicFactor::of(&e);
        let p = peo_from_tree_decomposition(&tree_decomposition_of_factor(&f)).unwrap();
        let g = symbolic_cholesky(&permute(&e, &p).unwrap());
        assert!(frontsize(&g) <= f.frontsize());
    }

    #[test]
    fn rejects_non_tree() {
        let td = TreeDecomposition::new(vec![vec![1], vec![2]], vec![]);
        assert!(peo_from_tree_decomposition(&td).is_err());
    }
}
