use super::{clique_selectors, CliqueSelector, VecIndexer};
use crate::error::{Error, Result};
use crate::graph::{SparsityPattern, SymbolicFactor};
use crate::model::SdpProblem;

fn check_orders(problem: &SdpProblem) -> Result<()> {
    let n = problem.n;
    if problem.c.order() != n || problem.a.iter().any(|a| a.order() != n) {
        return Err(Error::DimensionMismatch("data matrices disagree on order".into()));
    }
    Ok(())
}

/// `E = spar(C) ∪ spar(A_1) ∪ ⋯ ∪ spar(A_m)`, off-diagonal part.
pub fn aggregate_sparsity(problem: &SdpProblem) -> Result<SparsityPattern> {
    check_orders(problem)?;
    let mut cols = vec![Vec::new(); problem.n];
    for m in std::iter::once(&problem.c).chain(&problem.a) {
        for &(i, j, _) in m.entries0() {
            if i != j {
                cols[j].push(i);
            }
        }
    }
    Ok(SparsityPattern::from_columns0(problem.n, cols))
}

/// `Ē = spar(C) ∪ clique(supp A_1) ∪ ⋯`, off-diagonal part.
pub fn extended_sparsity(problem: &SdpProblem) -> Result<SparsityPattern> {
    check_orders(problem)?;
    let mut cols = vec![Vec::new(); problem.n];
    for &(i, j, _) in problem.c.entries0() {
        if i != j {
            cols[j].push(i);
        }
    }
    for a in &problem.a {
        add_clique(&mut cols, &a.support0());
    }
    Ok(SparsityPattern::from_columns0(problem.n, cols).off_diagonal())
}

/// Pushes `clique(S)` for sorted 0-based `S` into column lists.
pub(crate) fn add_clique(cols: &mut [Vec<usize>], s: &[usize]) {
    for (k, &b) in s.iter().enumerate() {
        cols[b].extend_from_slice(&s[k..]);
    }
}

/// `E⁽²⁾ = ⋃ clique(supp a_i) ∪ ⋃ clique(supp P_j)` over `{1..|F|}`.
///
/// `supports` are 1-based positions; `len` is `|F|`.
pub fn schur_sparsity(len: usize, supports: &[Vec<usize>], selectors: &[CliqueSelector]) -> SparsityPattern {
    let mut cols = vec![Vec::new(); len];
    for s in supports {
        let mut s0: Vec<usize> = s.iter().map(|p| p - 1).collect();
        s0.sort_unstable();
        s0.dedup();
        add_clique(&mut cols, &s0);
    }
    for sel in selectors {
        let mut s0 = sel.positions0().to_vec();
        s0.sort_unstable();
        add_clique(&mut cols, &s0);
    }
    SparsityPattern::from_columns0(len, cols)
}

/// `F⁽²⁾ = ⋃_k clique(supp P_k)`.
pub fn quadratic_lift(f: &SymbolicFactor) -> SparsityPattern {
    schur_sparsity(f.pattern().len(), &[], &clique_selectors(f))
}

/// `F̄⁽²⁾[V⁽²⁾]` relabelled onto the positions of `F`, where
/// `V⁽²⁾ = {idx_F̄(i,j) : (i,j) ∈ F}`. Requires `F ⊆ F̄`.
pub fn lifted_overestimate(f: &SymbolicFactor, fbar: &SymbolicFactor) -> Result<SparsityPattern> {
    if !f.pattern().is_subset_of(fbar.pattern()) {
        return Err(Error::MalformedPattern("F is not contained in F̄".into()));
    }
    let bar_ix = VecIndexer::new(fbar);
    let ix = VecIndexer::new(f);
    // Map each F̄ position to its F position, if any.
    let mut relabel = vec![usize::MAX; bar_ix.len()];
    for (i, j) in f.pattern().pairs() {
        relabel[bar_ix.idx(i, j)? - 1] = ix.idx(i, j)? - 1;
    }
    let lifted = quadratic_lift(fbar);
    let mut cols = vec![Vec::new(); ix.len()];
    for (a, b) in lifted.pairs() {
        let (ra, rb) = (relabel[a - 1], relabel[b - 1]);
        if ra != usize::MAX && rb != usize::MAX {
            cols[ra.min(rb)].push(ra.max(rb));
        }
    }
    Ok(SparsityPattern::from_columns0(ix.len(), cols))
}

/// Checks the sorted running intersection property of `bags` (1-based
/// vertices). Returns a witnessing parent map (`None` for the last bag) or
/// `None` if no parent pointer works.
pub fn check_sorted_rip(bags: &[Vec<usize>]) -> Option<Vec<Option<usize>>> {
    let l = bags.len();
    if l == 0 {
        return None;
    }
    let sorted: Vec<Vec<usize>> = bags
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.sort_unstable();
            b.dedup();
            b
        })
        .collect();
    if sorted.iter().any(Vec::is_empty) {
        return None;
    }
    let nv = sorted.iter().flatten().copied().max().unwrap_or(0) + 1;
    let mut last = vec![0usize; nv];
    for (k, b) in sorted.iter().enumerate() {
        for &v in b {
            last[v] = k;
        }
    }
    let ok = |j: usize, p: usize| -> bool {
        let jp = &sorted[p];
        let inside = |v: &usize| jp.binary_search(v).is_ok();
        let shared_ok = sorted[j].iter().filter(|&&v| last[v] > j).all(inside);
        let outside_max = sorted[j].iter().filter(|v| !inside(v)).max();
        shared_ok && outside_max.is_none_or(|&m| jp[0] > m)
    };
    let mut parent = vec![None; l];
    for j in 0..l - 1 {
        let guess = sorted[j].iter().copied().find(|&v| v > j + 1).map(|v| v - 1).filter(|&p| p < l);
        let found = guess
            .filter(|&p| ok(j, p))
            .or_else(|| (j + 1..l).find(|&p| ok(j, p)))?;
        parent[j] = Some(found + 1);
    }
    Some(parent)
}

/// `⋃ clique(J_j)` over 1-based bags.
pub fn union_of_cliques(n: usize, bags: &[Vec<usize>]) -> Result<SparsityPattern> {
    let mut cols = vec![Vec::new(); n];
    for b in bags {
        let mut s: Vec<usize> = Vec::with_capacity(b.len());
        for &v in b {
            if v == 0 || v > n {
                return Err(Error::MalformedPattern(format!("vertex {v} out of range")));
            }
            s.push(v - 1);
        }
        s.sort_unstable();
        s.dedup();
        add_clique(&mut cols, &s);
    }
    Ok(SparsityPattern::from_columns0(n, cols))
}
