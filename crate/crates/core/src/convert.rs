//! The full conversion pipeline: ordering, symbolic factorization, interior
//! point solve, and recovery of a low-rank factor `U` and multipliers `v`.

use std::io::{Read, Write};
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{frontsize, min_degree_order, permute, symbolic_cholesky, Permutation, SparsityPattern, SymbolicFactor};
use crate::ipm::chol::SparseCholesky;
use crate::ipm::{ipm_solve, Infeasibility, IpmOptions, Status, TraceRecord};
use crate::lift::{aggregate_sparsity, extended_sparsity, schur_sparsity, VecIndexer};
use crate::matrix::SparseSym;
use crate::model::{build_conic, ConicProgram, SdpProblem};

/// Where the elimination ordering comes from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum OrderingSource {
    /// Minimum degree on the extended pattern `Ē`.
    #[default]
    AmdExtended,
    Supplied(Permutation),
    Natural,
}

impl OrderingSource {
    pub fn label(&self) -> &'static str {
        match self {
            Self::AmdExtended => "amd",
            Self::Supplied(_) => "supplied",
            Self::Natural => "natural",
        }
    }

    pub fn resolve(&self, problem: &SdpProblem) -> Result<Permutation> {
        match self {
            Self::AmdExtended => Ok(min_degree_order(&extended_sparsity(problem)?)),
            Self::Supplied(p) => {
                if p.order() != problem.n {
                    return Err(Error::OrderMismatch { expected: problem.n, found: p.order() });
                }
                Ok(p.clone())
            }
            Self::Natural => Ok(Permutation::identity(problem.n)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvertOptions {
    pub ordering: OrderingSource,
    pub ipm: IpmOptions,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub prep_s: f64,
    pub periter_s: f64,
    pub post_s: f64,
}

/// Normalized errors of a recovered solution and the matching digit counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Digits {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    /// `−log₁₀` of the largest error, in `[0, 12]`.
    pub min: f64,
    /// Unnormalized `max_r(⟨Â_r,UUᵀ⟩ − b̂_r)₊`.
    pub pinf_abs: f64,
    /// Unnormalized `λ_max(Σ v_rÂ_r − C)₊`.
    pub dinf_abs: f64,
    /// `⟨C,UUᵀ⟩ − ⟨b̂,v⟩`.
    pub gap_abs: f64,
}

fn to_digits(err: f64) -> f64 {
    if err <= 1e-12 {
        12.0
    } else {
        (-err.log10()).clamp(0.0, 12.0)
    }
}

/// Output of the pipeline, in the original vertex ordering.
#[derive(Clone, Debug)]
pub struct CcSolution {
    /// `n × ω` factor.
    pub u: DMatrix<f64>,
    /// One multiplier per inequality row (equalities appear as a `≤` row and
    /// its negation), all `≤ 0`.
    pub v: Vec<f64>,
    /// Source constraint and sign of each entry of `v`.
    pub rows: Vec<(usize, f64)>,
    /// Shift applied before completion, safety margin included.
    pub delta: f64,
    /// Projection of `Y` onto `F`, original ordering.
    pub y: SparseSym,
    pub status: Status,
    pub iterations: usize,
    pub digits: Digits,
    pub timings: Timings,
    pub omega: usize,
    pub omega_bar: usize,
    pub ordering: Permutation,
    pub ordering_label: String,
    pub trace: Vec<TraceRecord>,
    pub measures: Infeasibility,
    /// Nonzero fill entries seen in the last Schur factorization.
    pub schur_fill: usize,
    /// Entries of `chol(E⁽²⁾)` outside `E⁽²⁾` under the Schur ordering.
    pub schur_structural_fill: usize,
    pub max_embedding_residual: f64,
}

impl CcSolution {
    /// `⟨C, UUᵀ⟩`.
    pub fn objective_primal(&self, problem: &SdpProblem) -> f64 {
        problem.c.inner_factor(&self.u)
    }

    /// `⟨b̂, v⟩`.
    pub fn objective_dual(&self, problem: &SdpProblem) -> f64 {
        self.rows.iter().zip(&self.v).map(|(&(i, s), v)| s * problem.b[i] * v).sum()
    }

    /// Multipliers per original constraint: `Σ_r sign_r v_r`.
    pub fn multipliers(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for (&(i, s), v) in self.rows.iter().zip(&self.v) {
            out[i] += s * v;
        }
        out
    }

    /// Largest `‖(UUᵀ)[J,J] − Y[J,J] − δI‖_F` over the cliques of `F`,
    /// together with `‖Y‖_F`.
    pub fn recovery_error(&self, factor: &SymbolicFactor) -> (f64, f64) {
        let pos = self.ordering.pos0();
        let n = self.u.nrows();
        let mut inv = vec![0; n];
        for (v, &p) in pos.iter().enumerate() {
            inv[p] = v;
        }
        let yp = self.y.permuted(&self.ordering);
        let mut worst: f64 = 0.0;
        for j in 0..factor.order() {
            let members = factor.col0(j);
            let mut e = 0.0;
            for (a, &ra) in members.iter().enumerate() {
                for &rb in &members[..=a] {
                    let uu = self.u.row(inv[ra]).dot(&self.u.row(inv[rb]));
                    let mut t = yp.get(ra + 1, rb + 1);
                    if ra == rb {
                        t += self.delta;
                    }
                    let d = uu - t;
                    e += if ra == rb { d * d } else { 2.0 * d * d };
                }
            }
            worst = worst.max(e.sqrt());
        }
        (worst, self.y.frobenius_norm())
    }

    /// Result record for the JSON output.
    pub fn result_json(&self, problem: &SdpProblem) -> serde_json::Value {
        serde_json::json!({
            "objective_primal": self.objective_primal(problem),
            "objective_dual": self.objective_dual(problem),
            "digits": self.digits.min,
            "digits_detail": self.digits,
            "iters": self.iterations,
            "delta": self.delta,
            "omega": self.omega,
            "omega_bar": self.omega_bar,
            "timings": self.timings,
            "ordering": self.ordering_label,
            "status": self.status,
        })
    }
}

/// Runs the pipeline. Fails with [`Error::Infeasible`] when the embedding
/// certifies infeasibility.
pub fn chordal_convert_solve(problem: &SdpProblem, opts: &ConvertOptions) -> Result<CcSolution> {
    let t0 = Instant::now();
    problem.validate()?;
    let perm = opts.ordering.resolve(problem)?;
    let pp = problem.permuted(&perm)?;
    let omega = frontsize(&aggregate_sparsity(&pp)?);
    let omega_bar = frontsize(&extended_sparsity(&pp)?);
    let cp = build_conic(problem, &perm)?;
    let prep_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let sol = ipm_solve(&cp, &opts.ipm)?;
    let solve_s = t1.elapsed().as_secs_f64();
    match sol.status {
        Status::Infeasible => {
            let ray_b: f64 = cp.b().iter().zip(&sol.y).map(|(a, b)| a * b).sum();
            let ray_c: f64 = cp.c().iter().zip(&sol.x).map(|(a, b)| a * b).sum();
            return Err(Error::Infeasible(format!(
                "tau={:.3e} kappa={:.3e} b'y={ray_b:.3e} c'x={ray_c:.3e}",
                sol.state.tau, sol.state.kappa
            )));
        }
        Status::IterationLimit => return Err(Error::IterationLimit(sol.iterations)),
        Status::Optimal | Status::AlmostOptimal => {}
    }

    let t2 = Instant::now();
    let m_rows = cp.num_ineq();
    let v: Vec<f64> = sol.x[..m_rows].iter().map(|x| -x.max(0.0)).collect();
    let (u_perm, delta) = recover_factor(&cp, &sol.y)?;
    let pos = perm.pos0();
    let w = u_perm.ncols();
    let mut u = DMatrix::zeros(problem.n, w);
    for vtx in 0..problem.n {
        u.row_mut(vtx).copy_from(&u_perm.row(pos[vtx]));
    }
    let ix = VecIndexer::new(cp.factor());
    let y_perm = ix.smat(&sol.y)?;
    let y = y_perm.permuted(&perm.inverse());
    let rows = cp.rows.clone();
    let digits = accurate_digits(problem, &u, &v, &rows)?;
    let post_s = t2.elapsed().as_secs_f64();

    Ok(CcSolution {
        u,
        v,
        rows,
        delta,
        y,
        status: sol.status,
        iterations: sol.iterations,
        digits,
        timings: Timings { prep_s, periter_s: solve_s / sol.iterations.max(1) as f64, post_s },
        omega,
        omega_bar,
        ordering: perm,
        ordering_label: opts.ordering.label().to_string(),
        trace: sol.trace,
        measures: sol.measures,
        schur_fill: sol.stats.fill,
        schur_structural_fill: sol.structural_fill,
        max_embedding_residual: sol.max_residual,
    })
}

/// Shift and completion from the dual iterate `y = svec_F(Y)` (reordered
/// indexing). Returns `Ũ` and the shift with its safety margin.
fn recover_factor(cp: &ConicProgram, y: &[f64]) -> Result<(DMatrix<f64>, f64)> {
    let ix = VecIndexer::new(cp.factor());
    let yf = ix.smat(y)?;
    let f = cp.factor();
    let mut lmin = f64::INFINITY;
    let mut nmax: f64 = 0.0;
    for sel in cp.selectors() {
        let block = clique_block(&yf, sel.members0());
        nmax = nmax.max(block.norm());
        lmin = lmin.min(SymmetricEigen::new(block).eigenvalues.min());
    }
    let delta = -(lmin.min(0.0));
    let delta = delta + 1e-12 * (1.0 + nmax);
    let u = complete_psd(&yf, f, delta)?;
    Ok((u, delta))
}

fn clique_block(y: &SparseSym, members: &[usize]) -> DMatrix<f64> {
    let w = members.len();
    DMatrix::from_fn(w, w, |a, b| y.get(members[a] + 1, members[b] + 1))
}

/// Finds `U` (`n × ω`) with `(UUᵀ)[J_j,J_j] = Y[J_j,J_j] + δI` for every
/// column set `J_j` of `F`, working from the last column to the first.
/// `Y` is read on `F` only.
pub fn complete_psd(y: &SparseSym, f: &SymbolicFactor, delta: f64) -> Result<DMatrix<f64>> {
    let n = f.order();
    if y.order() != n {
        return Err(Error::OrderMismatch { expected: n, found: y.order() });
    }
    let w = f.frontsize();
    let mut u = DMatrix::<f64>::zeros(n, w);
    for j in (0..n).rev() {
        let col = f.col0(j);
        let nb = &col[1..];
        let k = nb.len();
        let yjj = y.get(j + 1, j + 1) + delta;
        if k == 0 {
            if !(yjj > 0.0) {
                return Err(Error::Completion { clique: j + 1 });
            }
            u[(j, 0)] = yjj.sqrt();
            continue;
        }
        // [Bᵀ | 0] = QR with B = U[N_j, :].
        let mut bt = DMatrix::<f64>::zeros(w, w);
        for (c, &r) in nb.iter().enumerate() {
            for t in 0..w {
                bt[(t, c)] = u[(r, t)];
            }
        }
        let qr = bt.qr();
        let q = qr.q();
        let r = qr.r();
        let rhs = DVector::from_iterator(k, nb.iter().map(|&i| y.get(i + 1, j + 1)));
        let rk = r.view((0, 0), (k, k)).into_owned();
        let z = rk
            .transpose()
            .solve_lower_triangular(&rhs)
            .filter(|z| z.iter().all(|v| v.is_finite()))
            .ok_or(Error::Completion { clique: j + 1 })?;
        let mut row = q.columns(0, k) * z;
        let rem = yjj - row.norm_squared();
        if !(rem > 0.0) {
            return Err(Error::Completion { clique: j + 1 });
        }
        row += q.column(k) * rem.sqrt();
        u.row_mut(j).copy_from(&row.transpose());
    }
    Ok(u)
}

/// Normalized primal, dual, and gap errors of `(U, v)` and their digits.
/// `rows` gives the source constraint and sign of each entry of `v`.
pub fn accurate_digits(problem: &SdpProblem, u: &DMatrix<f64>, v: &[f64], rows: &[(usize, f64)]) -> Result<Digits> {
    if v.len() != rows.len() || u.nrows() != problem.n {
        return Err(Error::DimensionMismatch("solution does not match the problem".into()));
    }
    let bnorm = problem.b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let inner: Vec<f64> = problem.a.iter().map(|a| a.inner_factor(u)).collect();
    let pinf_abs = rows
        .iter()
        .map(|&(i, s)| (s * (inner[i] - problem.b[i])).max(0.0))
        .fold(0.0, f64::max);
    let mut z = problem.c.scaled(-1.0);
    let mut trip: Vec<(usize, usize, f64)> = z.triplets().collect();
    for (&(i, s), &vr) in rows.iter().zip(v) {
        if vr != 0.0 {
            trip.extend(problem.a[i].triplets().map(|(a, b, x)| (a, b, s * vr * x)));
        }
    }
    z = SparseSym::new(problem.n, trip)?;
    let dinf_abs = lambda_max(&z)?.max(0.0);
    let pobj = problem.c.inner_factor(u);
    let dobj: f64 = rows.iter().zip(v).map(|(&(i, s), vr)| s * problem.b[i] * vr).sum();
    let gap_abs = pobj - dobj;
    let primal = pinf_abs / (1.0 + bnorm);
    let dual = dinf_abs / (1.0 + problem.c.frobenius_norm());
    let gap = gap_abs.abs() / (1.0 + pobj.abs() + dobj.abs());
    let worst = primal.max(dual).max(gap);
    Ok(Digits { primal, dual, gap, min: to_digits(worst), pinf_abs, dinf_abs, gap_abs })
}

/// Largest eigenvalue: dense for `n ≤ 500`, otherwise bisection with sparse
/// positive-definiteness tests of `tI − Z` to about three significant digits.
pub fn lambda_max(z: &SparseSym) -> Result<f64> {
    let n = z.order();
    if n == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    if n <= 500 {
        return Ok(SymmetricEigen::new(z.to_dense()).eigenvalues.max());
    }
    let pat = z.pattern().off_diagonal();
    let perm = min_degree_order(&pat);
    let lpat = symbolic_cholesky(&permute(&pat, &perm)?);
    let mut chol = SparseCholesky::new(&lpat);
    let pos = perm.pos0().to_vec();
    let mut gersh = vec![0.0f64; n];
    for (i, j, x) in z.triplets() {
        gersh[i - 1] += x.abs();
        if i != j {
            gersh[j - 1] += x.abs();
        }
    }
    let hi0 = gersh.iter().fold(0.0f64, |m, x| m.max(*x));
    let mut pd = |t: f64| -> bool {
        chol.values.fill(0.0);
        for j in 0..n {
            let p = chol.diag_pos(j);
            chol.values[p] = t;
        }
        for (i, j, x) in z.triplets() {
            let (a, b) = (pos[i - 1], pos[j - 1]);
            let (a, b) = if a >= b { (a, b) } else { (b, a) };
            let p = chol.position(a, b).expect("pattern of Z is inside its factor");
            chol.values[p] -= x;
        }
        chol.factor().is_ok()
    };
    // λ_max < t iff tI − Z ≻ 0.
    let (mut lo, mut hi) = if pd(0.0) { (-hi0 - 1.0, 0.0) } else { (0.0, hi0 + 1.0) };
    let floor = 1e-14 * (1.0 + hi0);
    for _ in 0..200 {
        if hi - lo <= 1e-3 * hi.abs().max(lo.abs()) || hi - lo <= floor {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if pd(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Structural quantities of an instance under an ordering, without solving.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n: usize,
    pub m: usize,
    pub omega: usize,
    pub omega_bar: usize,
    /// Frontsize of `E⁽²⁾` in its natural ordering.
    pub omega_schur: usize,
    /// `½ω(ω+1)`.
    pub lower_bound: usize,
    /// `½ω̄(ω̄+1)`.
    pub upper_bound: usize,
    pub e_equals_ebar: bool,
    /// `chol(E⁽²⁾) = E⁽²⁾` under the natural ordering.
    pub zero_fill: bool,
    /// `nnz(chol(E⁽²⁾))`, diagonal included.
    pub nnz_l: usize,
    /// `|E⁽²⁾|` with the diagonal.
    pub nnz_schur: usize,
    /// `|F|`, the Schur dimension.
    pub f_len: usize,
    pub orthant_dim: usize,
    pub psd_cone_sizes: Vec<usize>,
}

pub fn analyze_instance(problem: &SdpProblem, perm: &Permutation) -> Result<AnalysisReport> {
    problem.validate()?;
    let pp = problem.permuted(perm)?;
    let e = aggregate_sparsity(&pp)?;
    let ebar = extended_sparsity(&pp)?;
    let cp = build_conic(problem, perm)?;
    let e2 = schur_sparsity(cp.num_rows(), &cp.column_supports(), cp.selectors()).with_diagonal();
    let l = symbolic_cholesky(&e2);
    let omega = frontsize(&e);
    let omega_bar = frontsize(&ebar);
    Ok(AnalysisReport {
        n: problem.n,
        m: problem.m(),
        omega,
        omega_bar,
        omega_schur: frontsize(&e2),
        lower_bound: omega * (omega + 1) / 2,
        upper_bound: omega_bar * (omega_bar + 1) / 2,
        e_equals_ebar: e.same_off_diagonal(&ebar),
        zero_fill: l == e2,
        nnz_l: l.len(),
        nnz_schur: e2.len(),
        f_len: cp.num_rows(),
        orthant_dim: cp.num_ineq(),
        psd_cone_sizes: cp.selectors().iter().map(|s| s.size()).collect(),
    })
}

/// Writes `U` as `CCU1 n omega\n` followed by row-major little-endian `f64`.
pub fn write_u<W: Write>(mut w: W, u: &DMatrix<f64>) -> Result<()> {
    writeln!(w, "CCU1 {} {}", u.nrows(), u.ncols())?;
    let mut buf = Vec::with_capacity(8 * u.len());
    for i in 0..u.nrows() {
        for j in 0..u.ncols() {
            buf.extend_from_slice(&u[(i, j)].to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_u<R: Read>(mut r: R) -> Result<DMatrix<f64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let bad = || Error::Parse { line: 1, msg: format!("bad header '{header}'") };
    if parts.len() != 3 || parts[0] != "CCU1" {
        return Err(bad());
    }
    let n: usize = parts[1].parse().map_err(|_| bad())?;
    let w: usize = parts[2].parse().map_err(|_| bad())?;
    let body = &bytes[nl + 1..];
    if body.len() != 8 * n * w {
        return Err(Error::Parse { line: 2, msg: format!("expected {} bytes of data, found {}", 8 * n * w, body.len()) });
    }
    Ok(DMatrix::from_row_iterator(
        n,
        w,
        body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))),
    ))
}

/// Projection of `UUᵀ` onto a pattern (lower triangle, 1-based).
pub fn project_factor(u: &DMatrix<f64>, pattern: &SparsityPattern) -> Result<SparseSym> {
    SparseSym::new(pattern.order(), pattern.pairs().map(|(i, j)| (i, j, u.row(i - 1).dot(&u.row(j - 1)))))
}
