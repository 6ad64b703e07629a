//! Cone arithmetic on vectors laid out as `[orthant | svec(X_1) | svec(X_2) | …]`.
//!
//! PSD blocks use the dense column-stacking `svec` with `√2` off-diagonals.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::Cone;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Position of `(a, b)`, `a ≥ b`, inside `svec` of an order-`w` block.
#[inline]
pub(crate) fn local_idx(a: usize, b: usize, w: usize) -> usize {
    b * w - b * b.saturating_sub(1) / 2 + (a - b)
}

pub(crate) fn smat(v: &[f64], w: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(w, w);
    let mut k = 0;
    for b in 0..w {
        m[(b, b)] = v[k];
        k += 1;
        for a in b + 1..w {
            let x = v[k] / SQRT2;
            m[(a, b)] = x;
            m[(b, a)] = x;
            k += 1;
        }
    }
    m
}

pub(crate) fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let w = m.nrows();
    let mut k = 0;
    for b in 0..w {
        out[k] = m[(b, b)];
        k += 1;
        for a in b + 1..w {
            out[k] = 0.5 * (m[(a, b)] + m[(b, a)]) * SQRT2;
            k += 1;
        }
    }
}

/// Iterates `(cone, offset)` pairs.
pub(crate) fn blocks(cones: &[Cone]) -> impl Iterator<Item = (Cone, usize)> + '_ {
    cones.iter().scan(0usize, |off, &c| {
        let o = *off;
        *off += c.dim();
        Some((c, o))
    })
}

/// `𝟙_𝒦`: ones on the orthant, `svec(I)` on PSD blocks.
pub fn cone_unit(cones: &[Cone]) -> Vec<f64> {
    let total: usize = cones.iter().map(Cone::dim).sum();
    let mut v = vec![0.0; total];
    for (c, off) in blocks(cones) {
        match c {
            Cone::Orthant(m) => v[off..off + m].fill(1.0),
            Cone::Psd(w) => {
                let mut k = off;
                for b in 0..w {
                    v[k] = 1.0;
                    k += w - b;
                }
            }
        }
    }
    v
}

fn cholesky(m: DMatrix<f64>, cone: usize) -> Result<DMatrix<f64>> {
    m.cholesky().map(|c| c.l()).ok_or(Error::NotInterior { cone })
}

/// Per-cone Nesterov–Todd scaling.
#[derive(Clone, Debug)]
pub enum BlockScaling {
    /// `w_i = √(x_i/s_i)`.
    Orthant(Vec<f64>),
    /// `W` with `W⁻¹XW⁻¹ = S`, its inverse, and the eigenvalues of `XS`.
    Psd { w: DMatrix<f64>, winv: DMatrix<f64>, xs_eig: Vec<f64> },
}

/// The scaling point `w` with `∇²f(w)x = s`.
#[derive(Clone, Debug)]
pub struct ScalingPoint {
    pub blocks: Vec<BlockScaling>,
}

impl ScalingPoint {
    /// `w⁻¹`, for which `∇²f(w⁻¹) = ∇²f(w)⁻¹`.
    pub fn inverse(&self) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| match b {
                BlockScaling::Orthant(w) => BlockScaling::Orthant(w.iter().map(|v| 1.0 / v).collect()),
                BlockScaling::Psd { w, winv, xs_eig } => {
                    BlockScaling::Psd { w: winv.clone(), winv: w.clone(), xs_eig: xs_eig.clone() }
                }
            })
            .collect();
        Self { blocks }
    }
}

/// Closed-form NT scaling. For PSD blocks, with `X = LLᵀ`, `S = RRᵀ` and
/// `RᵀL = UΣVᵀ`: `W = GGᵀ`, `G = LVΣ^{-1/2}`, and `W⁻¹ = HHᵀ`, `H = RUΣ^{-1/2}`.
pub fn nt_scaling(x: &[f64], s: &[f64], cones: &[Cone]) -> Result<ScalingPoint> {
    let mut out = Vec::with_capacity(cones.len());
    for (k, (c, off)) in blocks(cones).enumerate() {
        match c {
            Cone::Orthant(m) => {
                let mut w = Vec::with_capacity(m);
                for i in off..off + m {
                    if !(x[i] > 0.0 && s[i] > 0.0) {
                        return Err(Error::NotInterior { cone: k });
                    }
                    w.push((x[i] / s[i]).sqrt());
                }
                out.push(BlockScaling::Orthant(w));
            }
            Cone::Psd(w) => {
                let len = c.dim();
                let l = cholesky(smat(&x[off..off + len], w), k)?;
                let r = cholesky(smat(&s[off..off + len], w), k)?;
                let svd = (r.transpose() * &l).svd(true, true);
                let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
                let sig = svd.singular_values;
                if sig.iter().any(|&v| !(v > 0.0)) {
                    return Err(Error::NotInterior { cone: k });
                }
                let isq = DMatrix::from_diagonal(&sig.map(|v| 1.0 / v.sqrt()));
                let g = &l * vt.transpose() * &isq;
                let h = &r * u * &isq;
                out.push(BlockScaling::Psd {
                    w: &g * g.transpose(),
                    winv: &h * h.transpose(),
                    xs_eig: sig.iter().map(|v| v * v).collect(),
                });
            }
        }
    }
    Ok(ScalingPoint { blocks: out })
}

fn congruence(g: &DMatrix<f64>, v: &[f64], out: &mut [f64]) {
    let m = smat(v, g.nrows());
    svec_into(&(g * m * g), out);
}

fn check_len(v: &[f64], cones: &[Cone]) -> Result<()> {
    let total: usize = cones.iter().map(Cone::dim).sum();
    if v.len() != total {
        return Err(Error::DimensionMismatch(format!("vector length {} vs cone dimension {total}", v.len())));
    }
    Ok(())
}

/// `∇²f(w)v`: `v_i/w_i²` on the orthant, `svec(W⁻¹VW⁻¹)` on PSD blocks.
pub fn hessian_apply(w: &ScalingPoint, v: &[f64], cones: &[Cone]) -> Result<Vec<f64>> {
    check_len(v, cones)?;
    let mut out = vec![0.0; v.len()];
    for ((c, off), b) in blocks(cones).zip(&w.blocks) {
        let r = off..off + c.dim();
        match b {
            BlockScaling::Orthant(ws) => {
                for ((o, &x), &wi) in out[r.clone()].iter_mut().zip(&v[r]).zip(ws) {
                    *o = x / (wi * wi);
                }
            }
            BlockScaling::Psd { winv, .. } => congruence(winv, &v[r.clone()], &mut out[r]),
        }
    }
    Ok(out)
}

/// `∇²f(w)⁻¹v`: `v_i·w_i²` on the orthant, `svec(WVW)` on PSD blocks.
pub fn hessian_inv_apply(w: &ScalingPoint, v: &[f64], cones: &[Cone]) -> Result<Vec<f64>> {
    hessian_apply(&w.inverse(), v, cones)
}

/// `−∇f(x)`: `1/x_i` on the orthant, `svec(X⁻¹)` on PSD blocks.
pub(crate) fn neg_barrier_grad(x: &[f64], cones: &[Cone]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; x.len()];
    for (k, (c, off)) in blocks(cones).enumerate() {
        match c {
            Cone::Orthant(m) => {
                for i in off..off + m {
                    out[i] = 1.0 / x[i];
                }
            }
            Cone::Psd(w) => {
                let len = c.dim();
                let inv = smat(&x[off..off + len], w).cholesky().ok_or(Error::NotInterior { cone: k })?.inverse();
                svec_into(&inv, &mut out[off..off + len]);
            }
        }
    }
    Ok(out)
}

/// Largest `α` with `x + α·dx` in the closed cone (∞ if unbounded).
pub(crate) fn max_step(x: &[f64], dx: &[f64], cones: &[Cone]) -> Result<f64> {
    let mut alpha = f64::INFINITY;
    for (k, (c, off)) in blocks(cones).enumerate() {
        match c {
            Cone::Orthant(m) => {
                for i in off..off + m {
                    if dx[i] < 0.0 {
                        alpha = alpha.min(-x[i] / dx[i]);
                    }
                }
            }
            Cone::Psd(w) => {
                let len = c.dim();
                let l = cholesky(smat(&x[off..off + len], w), k)?;
                let linv = l.solve_lower_triangular(&DMatrix::identity(w, w)).ok_or(Error::NotInterior { cone: k })?;
                let m = &linv * smat(&dx[off..off + len], w) * linv.transpose();
                let lmin = SymmetricEigen::new(m).eigenvalues.min();
                if lmin < 0.0 {
                    alpha = alpha.min(-1.0 / lmin);
                }
            }
        }
    }
    Ok(alpha)
}

/// Smallest eigenvalue of `XS` over all blocks (orthant: `x_i s_i`), or
/// `None` if some block of `x` or `s` is not interior or falls below the
/// floor `λ_min ≥ floor·trace`.
pub(crate) fn min_complementarity(x: &[f64], s: &[f64], cones: &[Cone], floor: f64) -> Option<f64> {
    let mut best = f64::INFINITY;
    for (c, off) in blocks(cones) {
        let r = off..off + c.dim();
        best = best.min(block_complementarity(&x[r.clone()], &s[r], c, floor)?);
    }
    Some(best)
}

/// Whether every block of `(x + αΔx, s + αΔs)` has complementarity at least
/// `thresh`. Only the blocks visited are formed. Block `*first` is tested
/// first and the index of a failing block is written back, so repeated
/// checks along a backtracking search stop early.
#[allow(clippy::too_many_arguments)]
pub(crate) fn complementarity_at_least(
    (x, dx): (&[f64], &[f64]),
    (s, ds): (&[f64], &[f64]),
    alpha: f64,
    cones: &[Cone],
    floor: f64,
    thresh: f64,
    first: &mut usize,
) -> bool {
    let offs: Vec<(Cone, usize)> = blocks(cones).collect();
    let start = (*first).min(offs.len().saturating_sub(1));
    let (mut xb, mut sb) = (Vec::new(), Vec::new());
    for k in std::iter::once(start).chain((0..offs.len()).filter(|&k| k != start)) {
        let (c, off) = offs[k];
        let r = off..off + c.dim();
        xb.clear();
        xb.extend(x[r.clone()].iter().zip(&dx[r.clone()]).map(|(a, b)| a + alpha * b));
        sb.clear();
        sb.extend(s[r.clone()].iter().zip(&ds[r]).map(|(a, b)| a + alpha * b));
        match block_complementarity(&xb, &sb, c, floor) {
            Some(v) if v >= thresh => {}
            _ => {
                *first = k;
                return false;
            }
        }
    }
    true
}

fn block_complementarity(x: &[f64], s: &[f64], c: Cone, floor: f64) -> Option<f64> {
    match c {
        Cone::Orthant(_) => {
            let mut best = f64::INFINITY;
            for (&a, &b) in x.iter().zip(s) {
                if !(a > 0.0 && b > 0.0) {
                    return None;
                }
                best = best.min(a * b);
            }
            Some(best)
        }
        Cone::Psd(w) => {
            let xm = smat(x, w);
            let sm = smat(s, w);
            for m in [&xm, &sm] {
                let e = SymmetricEigen::new(m.clone()).eigenvalues;
                if !(e.min() > floor * m.trace().max(0.0)) {
                    return None;
                }
            }
            let l = xm.cholesky()?.l();
            Some(SymmetricEigen::new(l.transpose() * sm * l).eigenvalues.min())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_pd(w: usize, seed: u64) -> DMatrix<f64> {
        use rand::Rng;
        let mut r = crate::rng::stream(seed, "test.pd");
        let b = DMatrix::from_fn(w, w, |_, _| r.random_range(-1.0..1.0));
        &b * b.transpose() + DMatrix::identity(w, w) * 0.5
    }

    fn sv(m: &DMatrix<f64>) -> Vec<f64> {
        let w = m.nrows();
        let mut v = vec![0.0; w * (w + 1) / 2];
        svec_into(m, &mut v);
        v
    }

    #[test]
    fn unit_is_fixed_point() {
        let cones = [Cone::Orthant(2), Cone::Psd(3)];
        let one = cone_unit(&cones);
        let w = nt_scaling(&one, &one, &cones).unwrap();
        let h = hessian_apply(&w, &one, &cones).unwrap();
        for (a, b) in h.iter().zip(&one) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn orthant_scaling() {
        let cones = [Cone::Orthant(1)];
        let w = nt_scaling(&[4.0], &[1.0], &cones).unwrap();
        match &w.blocks[0] {
            BlockScaling::Orthant(v) => assert_eq!(v[0], 2.0),
            _ => unreachable!(),
        }
        let w2 = ScalingPoint { blocks: vec![BlockScaling::Orthant(vec![2.0])] };
        assert_eq!(hessian_apply(&w2, &[1.0], &cones).unwrap(), vec![0.25]);
        assert_eq!(hessian_inv_apply(&w2, &[1.0], &cones).unwrap(), vec![4.0]);
    }

    #[test]
    fn psd_scaling_defining_property() {
        let cones = [Cone::Psd(4)];
        let (x, s) = (random_pd(4, 1), random_pd(4, 2));
        let w = nt_scaling(&sv(&x), &sv(&s), &cones).unwrap();
        let BlockScaling::Psd { w: wm, winv, .. } = &w.blocks[0] else { unreachable!() };
        let lhs = winv * &x * winv;
        assert!((lhs - &s).norm() <= 1e-10 * s.norm());
        assert!((wm * winv - DMatrix::<f64>::identity(4, 4)).norm() < 1e-10);
        let hx = hessian_apply(&w, &sv(&x), &cones).unwrap();
        let want = sv(&s);
        let err: f64 = hx.iter().zip(&want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-9);
    }

    #[test]
    fn hessian_round_trip() {
        let cones = [Cone::Orthant(3), Cone::Psd(3)];
        let mut x = vec![1.0, 2.0, 0.5];
        x.extend(sv(&random_pd(3, 3)));
        let mut s = vec![0.3, 1.0, 4.0];
        s.extend(sv(&random_pd(3, 4)));
        let w = nt_scaling(&x, &s, &cones).unwrap();
        let v: Vec<f64> = (0..x.len()).map(|k| (k as f64).sin()).collect();
        let back = hessian_inv_apply(&w, &hessian_apply(&w, &v, &cones).unwrap(), &cones).unwrap();
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn svec_layout() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let v = sv(&m);
        assert_eq!(local_idx(2, 1, 3), 4);
        assert!((v[local_idx(2, 1, 3)] - 5.0 * SQRT2).abs() < 1e-14);
        assert_eq!(smat(&v, 3), m);
    }

    #[test]
    fn step_to_boundary() {
        let cones = [Cone::Orthant(2), Cone::Psd(2)];
        let x = cone_unit(&cones);
        let dx = vec![-0.5, 1.0, -2.0, 0.0, 0.0];
        assert!((max_step(&x, &dx, &cones).unwrap() - 0.5).abs() < 1e-14);
    }
}
