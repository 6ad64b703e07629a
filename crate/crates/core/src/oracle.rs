//! Brute-force references for tests. Nothing here calls into the code it
//! checks: the dense solver is a separate primal–dual method and the
//! pattern oracles follow the definitions literally.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::SparsityPattern;
use crate::ipm::{BlockScaling, ScalingPoint};
use crate::model::{ConicProgram, SdpProblem, Sense};

/// Dense reference solution.
#[derive(Clone, Debug)]
pub struct DenseSolution {
    pub objective: f64,
    pub x: DMatrix<f64>,
    /// One multiplier per original constraint, `≤ 0` on `≤` rows.
    pub v: Vec<f64>,
    pub iterations: usize,
    /// Largest of the relative primal, dual, and gap errors at return.
    pub accuracy: f64,
}

/// Accuracy at which a stalled run still returns its best iterate.
const STALL_ACCURACY: f64 = 1e-6;

/// Infeasible-start primal–dual method with the HKM direction on the dense
/// problem `min ⟨C,X⟩, ⟨A_i,X⟩ + t_i = b_i (t_i ≥ 0 on ≤ rows), X ⪰ 0`.
pub fn dense_solve(problem: &SdpProblem, eps: f64) -> Result<DenseSolution> {
    let n = problem.n;
    if n > 100 {
        return Err(Error::Guardrail(format!("dense_solve needs n ≤ 100, got {n}")));
    }
    let m = problem.m();
    let c = problem.c.to_dense();
    let a: Vec<DMatrix<f64>> = problem.a.iter().map(|x| x.to_dense()).collect();
    let b = DVector::from_column_slice(&problem.b);
    let le: Vec<bool> = problem.sense.iter().map(|s| *s == Sense::Le).collect();
    let ops = |x: &DMatrix<f64>| DVector::from_iterator(m, a.iter().map(|ai| ai.component_mul(x).sum()));
    let adj = |y: &DVector<f64>| {
        let mut s = DMatrix::zeros(n, n);
        for (ai, yi) in a.iter().zip(y.iter()) {
            s += ai * *yi;
        }
        s
    };

    let scale = 1.0 + c.norm().max(b.amax()).max(a.iter().map(|x| x.norm()).fold(0.0, f64::max));
    let xi = 10.0 * scale.sqrt() * (n as f64).sqrt().max(1.0);
    let mut x = DMatrix::identity(n, n) * xi;
    let mut z = DMatrix::identity(n, n) * xi;
    let mut y = DVector::zeros(m);
    let mut t = DVector::from_fn(m, |i, _| if le[i] { xi } else { 0.0 });
    let mut w = t.clone();
    let k = n + le.iter().filter(|&&l| l).count();
    let bnorm = 1.0 + b.amax();
    let cnorm = 1.0 + c.norm();

    let mut best: Option<DenseSolution> = None;
    let give_up = |best: Option<DenseSolution>, e: Error| match best {
        Some(b) if b.accuracy <= STALL_ACCURACY => Ok(b),
        _ => Err(e),
    };
    for iter in 0..300 {
        let rp = &b - ops(&x) - &t;
        let rd = &c - adj(&y) - &z;
        let rdt = DVector::from_fn(m, |i, _| if le[i] { -y[i] - w[i] } else { 0.0 });
        let gap = x.component_mul(&z).sum() + t.dot(&w);
        let mu = gap / k as f64;
        let pobj = c.component_mul(&x).sum();
        let dobj = b.dot(&y);
        let pinf = rp.amax() / bnorm;
        let dinf = rd.norm().max(rdt.amax()) / cnorm;
        let rgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let accuracy = pinf.max(dinf).max(rgap);
        if accuracy <= eps {
            return Ok(DenseSolution { objective: pobj, x, v: y.iter().copied().collect(), iterations: iter, accuracy });
        }
        if best.as_ref().is_none_or(|b| accuracy < b.accuracy) {
            best = Some(DenseSolution { objective: pobj, x: x.clone(), v: y.iter().copied().collect(), iterations: iter, accuracy });
        }

        let zinv = match z.clone().cholesky() {
            Some(ch) => ch.inverse(),
            None => return give_up(best, Error::NumericalFailure("Z lost definiteness".into())),
        };
        let mut schur = DMatrix::zeros(m, m);
        let xa: Vec<DMatrix<f64>> = a.iter().map(|ai| &x * ai * &zinv).collect();
        for i in 0..m {
            for j in 0..=i {
                let v = a[i].component_mul(&xa[j].transpose()).sum();
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
            if le[i] {
                schur[(i, i)] += t[i] / w[i];
            }
        }
        // Near the optimum the matrix can lose definiteness to roundoff;
        // retry with a growing diagonal shift.
        let maxdiag = schur.diagonal().amax().max(f64::MIN_POSITIVE);
        let mut shift = 0.0;
        let chol = loop {
            let mut trial = schur.clone();
            for i in 0..m {
                trial[(i, i)] += shift;
            }
            if let Some(ch) = trial.cholesky() {
                break ch;
            }
            shift = if shift == 0.0 { 1e-12 * maxdiag } else { shift * 100.0 };
            if shift > 1e-4 * maxdiag {
                return give_up(best, Error::NumericalFailure("dense Schur matrix not PD".into()));
            }
        };

        let direction = |sig: f64| {
            let target = &zinv * (sig * mu) - &x - &x * &rd * &zinv;
            let tt = DVector::from_fn(m, |i, _| {
                if le[i] {
                    sig * mu / w[i] - t[i] - t[i] / w[i] * rdt[i]
                } else {
                    0.0
                }
            });
            let rhs = &rp - ops(&target) - tt;
            let dy = chol.solve(&rhs);
            let dz = &rd - adj(&dy);
            let dx = &target + &x * adj(&dy) * &zinv;
            let dx = (&dx + dx.transpose()) * 0.5;
            let dw = DVector::from_fn(m, |i, _| if le[i] { rdt[i] - dy[i] } else { 0.0 });
            let dt = DVector::from_fn(m, |i, _| {
                if le[i] {
                    sig * mu / w[i] - t[i] - t[i] / w[i] * dw[i]
                } else {
                    0.0
                }
            });
            (dx, dy, dz, dt, dw)
        };
        let (dx, dy, dz, dt, dw) = direction(0.1);
        let ap = (0.95 * step_to_boundary(&x, &dx).min(vec_step(&t, &dt, &le))).min(1.0);
        let ad = (0.95 * step_to_boundary(&z, &dz).min(vec_step(&w, &dw, &le))).min(1.0);
        x += dx * ap;
        t += dt * ap;
        y += dy * ad;
        z += dz * ad;
        w += dw * ad;
        z = (&z + z.transpose()) * 0.5;
    }
    give_up(best, Error::IterationLimit(300))
}

fn step_to_boundary(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let l = match x.clone().cholesky() {
        Some(c) => c.l(),
        None => return 0.0,
    };
    let n = l.nrows();
    let linv = l.solve_lower_triangular(&DMatrix::identity(n, n)).expect("triangular with positive diagonal");
    let m = &linv * dx * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let e = m.symmetric_eigenvalues().min();
    if e < 0.0 {
        -1.0 / e
    } else {
        f64::INFINITY
    }
}

fn vec_step(v: &DVector<f64>, dv: &DVector<f64>, mask: &[bool]) -> f64 {
    (0..v.len())
        .filter(|&i| mask[i] && dv[i] < 0.0)
        .map(|i| -v[i] / dv[i])
        .fold(f64::INFINITY, f64::min)
}

/// Symbolic elimination straight from the definition: eliminating `k` adds
/// `(k,k)` and makes the later neighbours of `k` a clique.
pub fn elimination_oracle(e: &SparsityPattern) -> Result<SparsityPattern> {
    let n = e.order();
    if n > 256 {
        return Err(Error::Guardrail(format!("elimination oracle needs n ≤ 256, got {n}")));
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n + 1];
    for (i, j) in e.pairs() {
        if i != j {
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }
    let mut pairs = Vec::new();
    for k in 1..=n {
        pairs.push((k, k));
        let later: Vec<usize> = adj[k].iter().copied().filter(|&v| v > k).collect();
        for (a, &u) in later.iter().enumerate() {
            pairs.push((u, k));
            for &v in &later[a + 1..] {
                adj[u].insert(v);
                adj[v].insert(u);
            }
        }
    }
    SparsityPattern::new(n, pairs)
}

/// Path characterization: `(i, j)` with `i > j` is in `chol(E)` iff `E` has a
/// path from `i` to `j` whose interior vertices are all below `j`.
pub fn path_oracle(e: &SparsityPattern) -> Result<SparsityPattern> {
    let n = e.order();
    if n > 256 {
        return Err(Error::Guardrail(format!("path oracle needs n ≤ 256, got {n}")));
    }
    let mut adj = vec![Vec::new(); n + 1];
    for (i, j) in e.pairs() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=n).map(|k| (k, k)).collect();
    for j in 1..=n {
        // Search from j through vertices below j; record reached vertices above j.
        let mut seen = vec![false; n + 1];
        let mut stack = vec![j];
        seen[j] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                if v < j {
                    stack.push(v);
                } else {
                    pairs.push((v, j));
                }
            }
        }
    }
    SparsityPattern::new(n, pairs)
}

/// `𝐀·blockdiag(∇²f(w))·𝐀ᵀ` formed densely from explicit columns of `𝐀`.
pub fn dense_schur_oracle(cp: &ConicProgram, w: &ScalingPoint) -> Result<DMatrix<f64>> {
    let p = cp.num_rows();
    if p > 500 {
        return Err(Error::Guardrail(format!("dense Schur oracle needs |F| ≤ 500, got {p}")));
    }
    let ncols = cp.num_cols();
    let mut amat = DMatrix::<f64>::zeros(p, ncols);
    for k in 0..ncols {
        for (i, v) in cp.column(k) {
            amat[(i, k)] += v;
        }
    }
    let mut h = DMatrix::<f64>::zeros(ncols, ncols);
    let mut off = 0;
    for blk in &w.blocks {
        match blk {
            BlockScaling::Orthant(ws) => {
                for (i, wi) in ws.iter().enumerate() {
                    h[(off + i, off + i)] = 1.0 / (wi * wi);
                }
                off += ws.len();
            }
            BlockScaling::Psd { winv, .. } => {
                let d = winv.nrows();
                let basis = svec_basis(d);
                for (u, bu) in basis.iter().enumerate() {
                    let img = winv * bu * winv;
                    for (v, bv) in basis.iter().enumerate() {
                        h[(off + v, off + u)] = img.component_mul(bv).sum();
                    }
                }
                off += basis.len();
            }
        }
    }
    if off != ncols {
        return Err(Error::DimensionMismatch("scaling point does not match the program".into()));
    }
    Ok(&amat * h * amat.transpose())
}

/// Orthonormal basis of symmetric matrices in column-major lower order:
/// `E_aa` and `(E_ab + E_ba)/√2`.
fn svec_basis(d: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for bcol in 0..d {
        for arow in bcol..d {
            let mut m = DMatrix::zeros(d, d);
            if arow == bcol {
                m[(arow, arow)] = 1.0;
            } else {
                m[(arow, bcol)] = std::f64::consts::FRAC_1_SQRT_2;
                m[(bcol, arow)] = std::f64::consts::FRAC_1_SQRT_2;
            }
            out.push(m);
        }
    }
    out
}
