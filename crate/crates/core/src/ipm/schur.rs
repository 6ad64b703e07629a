//! The Schur complement `𝐀∇²f(w)𝐀ᵀ`, preallocated in `chol(E⁽²⁾)`.

use std::time::Instant;

use nalgebra::DMatrix;

use super::chol::SparseCholesky;
use super::cones::{local_idx, BlockScaling, ScalingPoint};
use crate::error::{Error, Result};
use crate::graph::{min_degree_order, permute, symbolic_cholesky, Permutation};
use crate::lift::schur_sparsity;
use crate::model::ConicProgram;

/// Symmetric ordering applied to the Schur matrix before factoring.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SchurOrdering {
    /// Factor as assembled; zero fill when `E = Ē`.
    #[default]
    Natural,
    /// Minimum degree on `E⁽²⁾`.
    Amd,
}

/// Factorization statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FactorStats {
    /// `nnz(L)`, diagonal included.
    pub nnz_l: usize,
    /// Lower-triangular pairs of `E⁽²⁾` with the diagonal.
    pub nnz_e2: usize,
    /// Entries of `L` outside `E⁽²⁾` that came out nonzero.
    pub fill: usize,
    /// Whether static regularization was needed.
    pub regularized: bool,
}

/// Preallocated Schur system with scatter maps from each column of `𝐀`.
#[derive(Clone, Debug)]
pub struct SchurSystem {
    dim: usize,
    /// Original index → permuted index.
    pos: Vec<usize>,
    chol: SparseCholesky,
    assembled: Vec<f64>,
    scale: Vec<f64>,
    outside_e2: Vec<usize>,
    orth_maps: Vec<Vec<usize>>,
    clique_maps: Vec<Vec<usize>>,
    stats: FactorStats,
    factored: bool,
}

impl SchurSystem {
    /// Builds `E⁽²⁾` from the program, orders it, and allocates `chol`.
    pub fn new(cp: &ConicProgram, ordering: SchurOrdering) -> Self {
        let dim = cp.num_rows();
        let e2 = schur_sparsity(dim, &cp.column_supports(), cp.selectors());
        let perm = match ordering {
            SchurOrdering::Natural => Permutation::identity(dim),
            SchurOrdering::Amd => min_degree_order(&e2.off_diagonal()),
        };
        let e2p = permute(&e2, &perm).expect("orders agree");
        let lpat = symbolic_cholesky(&e2p);
        let chol = SparseCholesky::new(&lpat);
        let pos = perm.pos0().to_vec();
        let e2d = e2p.with_diagonal();
        let outside_e2 = lpat
            .pairs()
            .enumerate()
            .filter(|&(_, (i, j))| !e2d.contains(i, j))
            .map(|(k, _)| k)
            .collect();
        let target = |p: usize, q: usize| -> usize {
            let (a, b) = (pos[p], pos[q]);
            let (i, j) = if a >= b { (a, b) } else { (b, a) };
            chol.position(i, j).expect("E2 is contained in its factor")
        };
        let orth_maps = cp
            .a_cols
            .iter()
            .map(|col| {
                let mut m = Vec::with_capacity(col.idx.len() * (col.idx.len() + 1) / 2);
                for a in 0..col.idx.len() {
                    for b in 0..=a {
                        m.push(target(col.idx[a], col.idx[b]));
                    }
                }
                m
            })
            .collect();
        let clique_maps = cp
            .selectors()
            .iter()
            .map(|s| {
                let ps = s.positions0();
                let mut m = Vec::with_capacity(ps.len() * (ps.len() + 1) / 2);
                for u in 0..ps.len() {
                    for v in 0..=u {
                        m.push(target(ps[u], ps[v]));
                    }
                }
                m
            })
            .collect();
        let nnz = chol.nnz();
        let stats = FactorStats { nnz_l: nnz, nnz_e2: e2d.len(), fill: 0, regularized: false };
        Self {
            dim,
            pos,
            chol,
            assembled: vec![0.0; nnz],
            scale: vec![1.0; dim],
            outside_e2,
            orth_maps,
            clique_maps,
            stats,
            factored: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stats(&self) -> FactorStats {
        self.stats
    }

    /// Structural fill of `chol(E⁽²⁾)` under the chosen ordering.
    pub fn structural_fill(&self) -> usize {
        self.outside_e2.len()
    }

    /// Overwrites the values with `𝐀∇²f(w)𝐀ᵀ = Σ d_i a_ia_iᵀ + Σ P_jD_jP_jᵀ`,
    /// where `d_i = w_i⁻²` and `D_j` is the matrix of `V ↦ W_j⁻¹VW_j⁻¹`.
    pub fn assemble(&mut self, cp: &ConicProgram, w: &ScalingPoint) -> Result<()> {
        if w.blocks.len() != 1 + cp.selectors().len() {
            return Err(Error::DimensionMismatch("scaling point does not match the cone list".into()));
        }
        self.assembled.fill(0.0);
        self.factored = false;
        let BlockScaling::Orthant(wo) = &w.blocks[0] else {
            return Err(Error::DimensionMismatch("first cone must be the orthant".into()));
        };
        for ((col, map), &wi) in cp.a_cols.iter().zip(&self.orth_maps).zip(wo) {
            let d = 1.0 / (wi * wi);
            let mut k = 0;
            for a in 0..col.idx.len() {
                let da = d * col.val[a];
                for b in 0..=a {
                    self.assembled[map[k]] += da * col.val[b];
                    k += 1;
                }
            }
        }
        let mut hblk: Vec<f64> = Vec::new();
        for (j, (sel, map)) in cp.selectors().iter().zip(&self.clique_maps).enumerate() {
            let BlockScaling::Psd { winv, .. } = &w.blocks[j + 1] else {
                return Err(Error::DimensionMismatch(format!("cone {} must be PSD", j + 1)));
            };
            psd_hessian_lower(winv, sel.size(), &mut hblk);
            for (&t, &v) in map.iter().zip(&hblk) {
                self.assembled[t] += v;
            }
        }
        Ok(())
    }

    /// Factors the assembled matrix, retrying once with a small diagonal
    /// shift if a pivot fails.
    ///
    /// The matrix is first scaled symmetrically to unit diagonal, so the
    /// shift is relative to each row's own size.
    pub fn factor(&mut self) -> Result<FactorStats> {
        for j in 0..self.dim {
            let d = self.assembled[self.chol.diag_pos(j)];
            self.scale[j] = if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 };
        }
        self.chol.load_scaled(&self.assembled, &self.scale);
        self.stats.regularized = false;
        if let Err(first) = self.chol.factor() {
            let shift = 1e-13;
            self.chol.load_scaled(&self.assembled, &self.scale);
            for j in 0..self.dim {
                let p = self.chol.diag_pos(j);
                self.chol.values[p] += shift;
            }
            self.chol.factor().map_err(|_| first)?;
            self.stats.regularized = true;
        }
        self.stats.fill = self.outside_e2.iter().filter(|&&k| self.chol.values[k] != 0.0).count();
        self.factored = true;
        Ok(self.stats)
    }

    /// Solves `Hv = r` with one pass of iterative refinement when the
    /// relative residual exceeds `1e−9`.
    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        if !self.factored {
            return Err(Error::NumericalFailure("Schur system used before factoring".into()));
        }
        let mut rp = vec![0.0; self.dim];
        for (i, &v) in r.iter().enumerate() {
            rp[self.pos[i]] = v;
        }
        let mut x = rp.clone();
        self.scaled_solve(&mut x);
        let hx = self.chol.sym_mul(&self.assembled, &x);
        let res: Vec<f64> = rp.iter().zip(&hx).map(|(a, b)| a - b).collect();
        let rn = norm(&rp);
        if rn > 0.0 && norm(&res) > 1e-9 * rn {
            let mut corr = res;
            self.scaled_solve(&mut corr);
            for (a, c) in x.iter_mut().zip(&corr) {
                *a += c;
            }
        }
        Ok((0..self.dim).map(|i| x[self.pos[i]]).collect())
    }

    fn scaled_solve(&self, x: &mut [f64]) {
        for (a, d) in x.iter_mut().zip(&self.scale) {
            *a *= d;
        }
        self.chol.solve(x);
        for (a, d) in x.iter_mut().zip(&self.scale) {
            *a *= d;
        }
    }

    /// The assembled matrix as a dense array in the original indexing.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut inv = vec![0; self.dim];
        for (i, &p) in self.pos.iter().enumerate() {
            inv[p] = i;
        }
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            for i in j..self.dim {
                if let Some(p) = self.chol.position(i, j) {
                    let (a, b) = (inv[i], inv[j]);
                    m[(a, b)] = self.assembled[p];
                    m[(b, a)] = self.assembled[p];
                }
            }
        }
        m
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Lower triangle (in local svec order, row-major over `u ≥ v`) of the
/// matrix of `V ↦ GVG` in the `svec` basis of order `w`.
pub(crate) fn psd_hessian_lower(g: &DMatrix<f64>, w: usize, out: &mut Vec<f64>) {
    let t = w * (w + 1) / 2;
    let mut pairs = Vec::with_capacity(t);
    for b in 0..w {
        for a in b..w {
            pairs.push((a, b));
        }
    }
    debug_assert!(pairs.iter().enumerate().all(|(k, &(a, b))| local_idx(a, b, w) == k));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    out.clear();
    out.reserve(t * (t + 1) / 2);
    for (u, &(a, b)) in pairs.iter().enumerate() {
        let sab = if a == b { h } else { 1.0 };
        for &(c, d) in &pairs[..=u] {
            let scd = if c == d { h } else { 1.0 };
            out.push((g[(a, c)] * g[(b, d)] + g[(a, d)] * g[(b, c)]) * sab * scd);
        }
    }
}

/// Wall-clock helper.
pub(crate) fn seconds_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::cycle_graph;
    use crate::ipm::cones::{cone_unit, nt_scaling};
    use crate::model::{build_conic, gen_diagonal_sdp, gen_lovasz_theta};

    #[test]
    fn hessian_block_matches_congruence() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.5, 0.2, -0.1, 0.2, 1.0]);
        let mut lower = Vec::new();
        psd_hessian_lower(&g, 3, &mut lower);
        let mut k = 0;
        for u in 0..6 {
            for v in 0..=u {
                let mut e = vec![0.0; 6];
                e[v] = 1.0;
                let m = crate::ipm::cones::smat(&e, 3);
                let mut out = vec![0.0; 6];
                crate::ipm::cones::svec_into(&(&g * m * &g), &mut out);
                assert!((out[u] - lower[k]).abs() < 1e-14);
                k += 1;
            }
        }
    }

    #[test]
    fn unit_scaling_with_no_constraints_gives_selector_gram() {
        let g = cycle_graph(5);
        let p = gen_lovasz_theta(&g).unwrap();
        let mut cp = build_conic(&p, &Permutation::identity(6)).unwrap();
        cp.a_cols.clear();
        cp.rows.clear();
        let n_orth = cp.num_ineq();
        let off = cp.psd_offsets[0];
        for o in cp.psd_offsets.iter_mut() {
            *o -= off;
        }
        cp.c.drain(..off);
        assert_eq!(n_orth, 0);
        let cones = cp.cones();
        let one = cone_unit(&cones);
        let w = nt_scaling(&one, &one, &cones).unwrap();
        let mut sys = SchurSystem::new(&cp, SchurOrdering::Natural);
        sys.assemble(&cp, &w).unwrap();
        let h = sys.to_dense();
        let lmin = h.symmetric_eigen().eigenvalues.min();
        assert!(lmin >= 1.0 - 1e-9, "{lmin}");
    }

    #[test]
    fn diagonal_problem_gives_normal_equations() {
        let p = gen_diagonal_sdp(&[1.0, -1.0, 0.5], &[vec![1.0, 2.0, 0.5], vec![0.3, 0.0, 1.0]], &[1.0, 2.0]).unwrap();
        let cp = build_conic(&p, &Permutation::identity(3)).unwrap();
        let cones = cp.cones();
        let x: Vec<f64> = (0..cp.num_cols()).map(|k| 1.0 + 0.1 * k as f64).collect();
        let s: Vec<f64> = (0..cp.num_cols()).map(|k| 2.0 - 0.05 * k as f64).collect();
        let w = nt_scaling(&x, &s, &cones).unwrap();
        let mut sys = SchurSystem::new(&cp, SchurOrdering::Natural);
        sys.assemble(&cp, &w).unwrap();
        let mut want = DMatrix::<f64>::zeros(3, 3);
        for k in 0..cp.num_cols() {
            let d = s[k] / x[k];
            for (i, vi) in cp.column(k) {
                for (j, vj) in cp.column(k) {
                    want[(i, j)] += d * vi * vj;
                }
            }
        }
        assert!((sys.to_dense() - want).norm() < 1e-12);
    }

    #[test]
    fn matches_dense_product_on_random_point() {
        let p = gen_lovasz_theta(&cycle_graph(5)).unwrap();
        let cp = build_conic(&p, &Permutation::identity(6)).unwrap();
        let cones = cp.cones();
        let one = cone_unit(&cones);
        let mut x = one.clone();
        let mut s = one.clone();
        for (k, (a, b)) in x.iter_mut().zip(s.iter_mut()).enumerate() {
            *a += 0.05 * ((k * 7 % 5) as f64 - 2.0) * 0.3;
            *b += 0.04 * ((k * 3 % 7) as f64 - 3.0) * 0.3;
        }
        let w = nt_scaling(&x, &s, &cones).unwrap();
        for ordering in [SchurOrdering::Natural, SchurOrdering::Amd] {
            let mut sys = SchurSystem::new(&cp, ordering);
            sys.assemble(&cp, &w).unwrap();
            let p = cp.num_rows();
            let mut want = DMatrix::<f64>::zeros(p, p);
            for i in 0..p {
                let mut e = vec![0.0; p];
                e[i] = 1.0;
                let col = cp.a_mul(&crate::ipm::hessian_apply(&w, &cp.at_mul(&e), &cones).unwrap());
                for j in 0..p {
                    want[(j, i)] = col[j];
                }
            }
            let err = (sys.to_dense() - &want).norm() / want.norm();
            assert!(err < 1e-12, "{ordering:?} {err}");
        }
    }
}
