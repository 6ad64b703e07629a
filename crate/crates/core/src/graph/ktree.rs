use rand::seq::SliceRandom;
use rand::Rng;

use super::{Permutation, SparsityPattern};
use crate::error::{Error, Result};
use crate::rng;

/// A random partial k-tree with the perfect elimination ordering of the
/// k-tree it was cut from.
#[derive(Clone, Debug)]
pub struct PartialKTree {
    pub pattern: SparsityPattern,
    pub peo: Permutation,
    pub k: usize,
}

/// Random k-tree on `n` vertices, optionally thinned to `round(ratio·n)`
/// edges by uniform deletion.
///
/// Starts from `K_{k+1}`; each further vertex joins a uniformly chosen
/// existing k-clique. Vertices are randomly relabelled afterwards.
pub fn random_partial_ktree(
    k: usize,
    n: usize,
    edge_ratio: Option<f64>,
    seed: u64,
) -> Result<PartialKTree> {
    if k == 0 || n <= k {
        return Err(Error::InvalidArgument(format!("need n > k >= 1, got k={k}, n={n}")));
    }
    let total = k * n - k * (k + 1) / 2;
    let target = match edge_ratio {
        Some(r) => {
            let max = total as f64 / n as f64;
            if !(r >= 0.0) || r > max + 1e-12 {
                return Err(Error::InfeasibleRatio { ratio: r, max });
            }
            ((r * n as f64).round() as usize).min(total)
        }
        None => total,
    };

    let mut rng_tree = rng::stream(seed, "ktree.attach");
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(total);
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    for a in 0..=k {
        for b in 0..a {
            edges.push((a, b));
        }
        cliques.push((0..=k).filter(|&x| x != a).collect());
    }
    for v in k + 1..n {
        let q = cliques[rng_tree.random_range(0..cliques.len())].clone();
        for &u in &q {
            edges.push((v, u));
        }
        for drop in 0..k {
            let mut c: Vec<usize> = q.iter().copied().enumerate().filter(|&(t, _)| t != drop).map(|(_, x)| x).collect();
            c.push(v);
            cliques.push(c);
        }
    }

    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(&mut rng::stream(seed, "ktree.relabel"));

    if target < edges.len() {
        let mut rng_del = rng::stream(seed, "ktree.delete");
        let (kept, _) = edges.partial_shuffle(&mut rng_del, target);
        edges = kept.to_vec();
    }
    let pattern = SparsityPattern::new(n, edges.iter().map(|&(a, b)| (label[a] + 1, label[b] + 1)))?;
    let peo = Permutation::from_order0(label.iter().rev().copied().collect());
    Ok(PartialKTree { pattern, peo, k })
}
