//! Problem families: diagonal SDPs, MAX-k-CUT, Lovász theta, sensor network
//! localization, unconstrained polynomial optimization, and an AC-OPF-like
//! family. Random variants draw from named streams of one seed.

use rand::Rng;

use super::{SdpProblem, Sense};
use crate::error::{Error, Result};
use crate::graph::SparsityPattern;
use crate::matrix::SparseSym;
use crate::rng;

/// Rescales every constraint so its matrix has unit max-abs entry.
fn normalized(mut p: SdpProblem) -> SdpProblem {
    for (a, b) in p.a.iter_mut().zip(p.b.iter_mut()) {
        let s = a.max_abs();
        if s > 0.0 && s != 1.0 {
            *a = a.scaled(1.0 / s);
            *b /= s;
        }
    }
    p
}

fn diag(n: usize, d: &[f64]) -> Result<SparseSym> {
    SparseSym::new(n, d.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, &v)| (i + 1, i + 1, v)))
}

/// `min cᵀx s.t. a_iᵀx ≤ b_i, x ≥ 0` as an SDP with diagonal data.
pub fn gen_diagonal_sdp(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<SdpProblem> {
    let n = c.len();
    let mats = a
        .iter()
        .enumerate()
        .map(|(i, ai)| {
            if ai.len() != n {
                return Err(Error::DimensionMismatch(format!("a_{} has length {}, expected {n}", i + 1, ai.len())));
            }
            diag(n, ai)
        })
        .collect::<Result<Vec<_>>>()?;
    SdpProblem::new(diag(n, c)?, mats, b.to_vec(), vec![Sense::Le; a.len()])
}

/// Random diagonal SDP: `a_i ∈ U(0.1,1)ⁿ`, `b ∈ U(1,2)ᵐ`, `c ∈ U(−1,1)ⁿ`.
pub fn random_diagonal_sdp(n: usize, m: usize, seed: u64) -> Result<SdpProblem> {
    let mut r = rng::stream(seed, "diag.data");
    let c: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| r.random_range(0.1..1.0)).collect()).collect();
    let b: Vec<f64> = (0..m).map(|_| r.random_range(1.0..2.0)).collect();
    Ok(normalized(gen_diagonal_sdp(&c, &a, &b)?))
}

fn edges(graph: &SparsityPattern) -> Vec<(usize, usize)> {
    graph.off_diagonal().pairs().collect()
}

/// MAX-k-CUT relaxation as a minimization of `−(k−1)/(2k)·⟨L, X⟩`.
///
/// `weights` follows the canonical edge order of `graph` (unit if `None`).
/// The cut value is the negated optimum.
pub fn gen_max_k_cut(graph: &SparsityPattern, weights: Option<&[f64]>, k: usize) -> Result<SdpProblem> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let n = graph.order();
    let es = edges(graph);
    if let Some(w) = weights {
        if w.len() != es.len() {
            return Err(Error::DimensionMismatch(format!("{} weights for {} edges", w.len(), es.len())));
        }
    }
    let scale = -((k - 1) as f64) / (2.0 * k as f64);
    let mut deg = vec![0.0; n];
    let mut cost = Vec::new();
    for (e, &(i, j)) in es.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[e]);
        deg[i - 1] += w;
        deg[j - 1] += w;
        cost.push((i, j, -w * scale));
    }
    cost.extend(deg.iter().enumerate().map(|(v, &d)| (v + 1, v + 1, d * scale)));
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut sense = Vec::new();
    for v in 1..=n {
        a.push(SparseSym::new(n, [(v, v, 1.0)])?);
        b.push(1.0);
        sense.push(Sense::Eq);
    }
    if k > 2 {
        for &(i, j) in &es {
            a.push(SparseSym::new(n, [(i, j, -1.0)])?);
            b.push(2.0 / (k - 1) as f64);
            sense.push(Sense::Le);
        }
    }
    Ok(normalized(SdpProblem::new(SparseSym::new(n, cost)?, a, b, sense)?))
}

/// Lovász theta in its sparse Schur-complement form of order `d+1`. The
/// optimum is `−ϑ(𝒢)`.
pub fn gen_lovasz_theta(graph: &SparsityPattern) -> Result<SdpProblem> {
    let d = graph.order();
    let n = d + 1;
    let mut cost: Vec<(usize, usize, f64)> = (1..=d).map(|v| (v, v, 1.0)).collect();
    cost.extend((1..=d).map(|v| (n, v, 1.0)));
    let mut a = vec![SparseSym::new(n, [(n, n, 1.0)])?];
    let mut b = vec![1.0];
    for (i, j) in edges(graph) {
        a.push(SparseSym::new(n, [(i, j, 1.0)])?);
        b.push(0.0);
    }
    let sense = vec![Sense::Eq; a.len()];
    SdpProblem::new(SparseSym::new(n, cost)?, a, b, sense)
}

/// Biswas–Ye relaxation with exact distances between sensors (and from
/// sensors to anchors) that lie within `radius` of each other.
///
/// Variables are ordered sensors first, then the `d` anchor coordinates.
pub fn gen_sensor_network(anchors: &[Vec<f64>], sensors: &[Vec<f64>], radius: f64) -> Result<SdpProblem> {
    let d = anchors.first().or(sensors.first()).map_or(0, Vec::len);
    if !(2..=3).contains(&d) || anchors.iter().chain(sensors).any(|p| p.len() != d) {
        return Err(Error::InvalidArgument("points must share a dimension of 2 or 3".into()));
    }
    let ns = sensors.len();
    let n = ns + d;
    let dist2 = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..ns {
        for j in 0..i {
            let r2 = dist2(&sensors[i], &sensors[j]);
            if r2 <= radius * radius {
                a.push(SparseSym::new(n, [(i + 1, i + 1, 1.0), (j + 1, j + 1, 1.0), (i + 1, j + 1, -1.0)])?);
                b.push(r2);
            }
        }
    }
    for i in 0..ns {
        for anchor in anchors {
            let r2 = dist2(&sensors[i], anchor);
            if r2 <= radius * radius {
                let mut t = vec![(i + 1, i + 1, 1.0)];
                for l in 0..d {
                    if anchor[l] != 0.0 {
                        t.push((ns + l + 1, i + 1, -anchor[l]));
                    }
                    for q in 0..=l {
                        let v = anchor[l] * anchor[q];
                        if v != 0.0 {
                            t.push((ns + l + 1, ns + q + 1, v));
                        }
                    }
                }
                a.push(SparseSym::new(n, t)?);
                b.push(r2);
            }
        }
    }
    for l in 0..d {
        for q in 0..=l {
            a.push(SparseSym::new(n, [(ns + l + 1, ns + q + 1, 1.0)])?);
            b.push(if l == q { 1.0 } else { 0.0 });
        }
    }
    let sense = vec![Sense::Eq; a.len()];
    Ok(normalized(SdpProblem::new(SparseSym::zeros(n), a, b, sense)?))
}

/// Random sensor network in the unit square (or cube) with anchors placed
/// uniformly as well.
pub fn random_sensor_network(ns: usize, na: usize, d: usize, radius: f64, seed: u64) -> Result<SdpProblem> {
    let mut r = rng::stream(seed, "snl.points");
    let mut pt = || (0..d).map(|_| r.random_range(0.0..1.0)).collect::<Vec<f64>>();
    let anchors: Vec<Vec<f64>> = (0..na).map(|_| pt()).collect();
    let sensors: Vec<Vec<f64>> = (0..ns).map(|_| pt()).collect();
    gen_sensor_network(&anchors, &sensors, radius)
}

/// Moment relaxation of `min Σ u_iᵀC_{ij}u_j` with `u_j = [1, x_j, …, x_j^{p−1}]`.
///
/// `cost` has order `n_vars·p`; block `i` occupies indices `i·p+1 ..= (i+1)·p`.
/// Each diagonal block is tied to be Hankel and has unit corner.
pub fn gen_poly_opt(cost: &SparseSym, p: usize, n_vars: usize) -> Result<SdpProblem> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("p must be at least 2, got {p}")));
    }
    let n = p * n_vars;
    if cost.order() != n {
        return Err(Error::DimensionMismatch(format!("cost has order {}, expected {n}", cost.order())));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for blk in 0..n_vars {
        let o = blk * p;
        a.push(SparseSym::new(n, [(o + 1, o + 1, 1.0)])?);
        b.push(1.0);
        for (e1, e2) in hankel_ties(p) {
            let coef = |(r, c): (usize, usize)| if r == c { 1.0 } else { 0.5 };
            a.push(SparseSym::new(
                n,
                [(o + e1.0 + 1, o + e1.1 + 1, coef(e1)), (o + e2.0 + 1, o + e2.1 + 1, -coef(e2))],
            )?);
            b.push(0.0);
        }
    }
    let sense = vec![Sense::Eq; a.len()];
    Ok(normalized(SdpProblem::new(cost.clone(), a, b, sense)?))
}

/// Consecutive lower-triangular entries `(r, c)` on each skew diagonal of a
/// `p × p` block, 0-based. There are `(p−1)(p−2)/2` of them.
pub fn hankel_ties(p: usize) -> Vec<((usize, usize), (usize, usize))> {
    let mut ties = Vec::new();
    for s in 0..2 * p - 1 {
        let entries: Vec<(usize, usize)> =
            (0..p).filter(|&r| s >= r && s - r <= r && s - r < p).map(|r| (r, s - r)).collect();
        for w in entries.windows(2) {
            ties.push((w[0], w[1]));
        }
    }
    ties
}

/// Random block-tridiagonal, diagonally dominant cost for [`gen_poly_opt`].
pub fn random_poly_opt(n_vars: usize, p: usize, seed: u64) -> Result<SdpProblem> {
    let mut r = rng::stream(seed, "poly.cost");
    let n = n_vars * p;
    let mut t = Vec::new();
    let mut rowsum = vec![0.0f64; n];
    let mut push = |t: &mut Vec<(usize, usize, f64)>, i: usize, j: usize, v: f64| {
        rowsum[i] += v.abs();
        rowsum[j] += v.abs();
        t.push((i + 1, j + 1, v));
    };
    for blk in 0..n_vars {
        let o = blk * p;
        for a in 0..p {
            for c in 0..a {
                push(&mut t, o + a, o + c, r.random_range(-1.0..1.0));
            }
        }
        if blk + 1 < n_vars {
            for a in 0..p {
                for c in 0..p {
                    push(&mut t, o + p + a, o + c, 0.5 * r.random_range(-1.0..1.0));
                }
            }
        }
    }
    for (i, s) in rowsum.iter().enumerate() {
        t.push((i + 1, i + 1, s + r.random_range(0.1..1.0)));
    }
    gen_poly_opt(&SparseSym::new(n, t)?, p, n_vars)
}

/// AC-OPF-like problem of order `2d` on a connected graph of `d` vertices.
///
/// Vertex `k` owns indices `2k−1, 2k`. Each vertex contributes two
/// constraint matrices `e_ke_kᵀ⊗α_k + ½Σ_{j∼k}(e_je_kᵀ⊗α_j + e_ke_jᵀ⊗α_jᵀ)`
/// with random `α`, each boxed around its value at a random interior point.
/// The cost is block-sparse on the graph and diagonally dominant.
pub fn gen_acopf_like(graph: &SparsityPattern, seed: u64) -> Result<SdpProblem> {
    let d = graph.order();
    let n = 2 * d;
    let adj = graph.adjacency0();
    let mut rc = rng::stream(seed, "acopf.cost");
    let mut ra = rng::stream(seed, "acopf.constraints");
    let mut rx = rng::stream(seed, "acopf.center");

    let mut cost = Vec::new();
    let mut rowsum = vec![0.0f64; n];
    for k in 0..d {
        let v: f64 = rc.random_range(-1.0..1.0);
        cost.push((2 * k + 2, 2 * k + 1, v));
        rowsum[2 * k] += v.abs();
        rowsum[2 * k + 1] += v.abs();
        for &j in adj[k].iter().filter(|&&j| j < k) {
            for (s, t) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let v: f64 = 0.5 * rc.random_range(-1.0..1.0);
                cost.push((2 * k + s + 1, 2 * j + t + 1, v));
                rowsum[2 * k + s] += v.abs();
                rowsum[2 * j + t] += v.abs();
            }
        }
    }
    for (i, s) in rowsum.iter().enumerate() {
        cost.push((i + 1, i + 1, s + rc.random_range(0.1..1.0)));
    }

    // Interior point X0 = VVᵀ + I with V of width 2.
    let v = nalgebra::DMatrix::from_fn(n, 2, |_, _| rx.random_range(-1.0..1.0));
    let x0 = &v * v.transpose() + nalgebra::DMatrix::identity(n, n);

    let mut a = Vec::new();
    let mut b = Vec::new();
    for k in 0..d {
        for _ in 0..2 {
            let mut t = Vec::new();
            let (p, q, r) = (ra.random_range(-1.0..1.0), ra.random_range(-1.0..1.0), ra.random_range(-1.0..1.0));
            t.push((2 * k + 1, 2 * k + 1, p));
            t.push((2 * k + 2, 2 * k + 1, q));
            t.push((2 * k + 2, 2 * k + 2, r));
            for &j in &adj[k] {
                for (s, u) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    t.push((2 * j + s + 1, 2 * k + u + 1, 0.5 * ra.random_range(-1.0..1.0)));
                }
            }
            let m = SparseSym::new(n, t)?;
            let center = m.inner_dense(&x0);
            let margin = 0.1 * (1.0 + center.abs());
            a.push(m.clone());
            b.push(center + margin);
            a.push(m.scaled(-1.0));
            b.push(-(center - margin));
        }
    }
    let sense = vec![Sense::Le; a.len()];
    Ok(normalized(SdpProblem::new(SparseSym::new(n, cost)?, a, b, sense)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete_graph, cycle_graph, path_graph};
    use crate::lift::{aggregate_sparsity, extended_sparsity};

    #[test]
    fn hankel_tie_count() {
        for p in 2..8 {
            assert_eq!(hankel_ties(p).len(), (p - 1) * (p - 2) / 2);
        }
    }

    #[test]
    fn maxcut_rows() {
        let p = gen_max_k_cut(&cycle_graph(10), None, 2).unwrap();
        assert_eq!(p.m(), 10);
        assert!(p.sense.iter().all(|s| *s == Sense::Eq));
        let p3 = gen_max_k_cut(&cycle_graph(10), None, 3).unwrap();
        assert_eq!(p3.m(), 20);
        assert!(gen_max_k_cut(&cycle_graph(4), None, 1).is_err());
    }

    #[test]
    fn maxcut_aggregate_is_graph() {
        let g = path_graph(5);
        let p = gen_max_k_cut(&g, None, 3).unwrap();
        assert_eq!(aggregate_sparsity(&p).unwrap(), g);
        assert_eq!(extended_sparsity(&p).unwrap(), g);
    }

    #[test]
    fn theta_has_equal_patterns() {
        let p = gen_lovasz_theta(&cycle_graph(5)).unwrap();
        assert_eq!(p.n, 6);
        assert_eq!(aggregate_sparsity(&p).unwrap(), extended_sparsity(&p).unwrap());
    }

    #[test]
    fn diagonal_with_dense_rows_has_complete_extension() {
        let p = random_diagonal_sdp(6, 2, 1).unwrap();
        assert!(aggregate_sparsity(&p).unwrap().is_empty());
        assert_eq!(extended_sparsity(&p).unwrap(), complete_graph(6));
    }

    #[test]
    fn sensor_chain_patterns_agree() {
        let anchors = vec![vec![0.3, 0.7], vec![0.9, 0.2]];
        let sensors = vec![vec![0.1, 0.1], vec![0.2, 0.15], vec![0.3, 0.2]];
        let p = gen_sensor_network(&anchors, &sensors, 0.12).unwrap();
        assert_eq!(aggregate_sparsity(&p).unwrap(), extended_sparsity(&p).unwrap());
    }

    #[test]
    fn acopf_supports_stay_in_closed_neighbourhoods() {
        let g = path_graph(2);
        let p = gen_acopf_like(&g, 4).unwrap();
        assert_eq!(p.n, 4);
        assert_eq!(p.m(), 8);
        for a in &p.a {
            assert!(a.support().iter().all(|&v| v <= 4));
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(random_poly_opt(3, 3, 5).unwrap(), random_poly_opt(3, 3, 5).unwrap());
        assert_eq!(gen_acopf_like(&path_graph(4), 2).unwrap(), gen_acopf_like(&path_graph(4), 2).unwrap());
    }
}
