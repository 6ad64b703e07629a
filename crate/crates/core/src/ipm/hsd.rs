//! Homogeneous self-dual embedding and the short-step / adaptive iteration.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::cones::{complementarity_at_least, cone_unit, hessian_apply, max_step, min_complementarity, neg_barrier_grad, nt_scaling, ScalingPoint};
use super::schur::{seconds_since, FactorStats, SchurOrdering, SchurSystem};
use crate::error::{Error, Result};
use crate::model::{Cone, ConicProgram};

/// Central-path acceptance constant for the short-step stopping test.
pub const GAMMA: f64 = 0.9;

/// Constants of the embedding derived from the initial point `x = s = 𝟙`.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub r_p: Vec<f64>,
    pub r_d: Vec<f64>,
    pub r_c: f64,
    /// Barrier parameter of `𝒦`; the embedding has `ν + 1`.
    pub nu: usize,
}

impl Embedding {
    pub fn new(cp: &ConicProgram) -> Self {
        let one = cone_unit(&cp.cones());
        let a1 = cp.a_mul(&one);
        let r_p = cp.b().iter().zip(&a1).map(|(b, a)| b - a).collect();
        let r_d = one.iter().zip(cp.c()).map(|(o, c)| o - c).collect();
        let r_c = 1.0 + dot(cp.c(), &one);
        Self { r_p, r_d, r_c, nu: cp.barrier_degree() }
    }
}

/// Iterate `(x, y, s, τ, θ, κ)` of the embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsdState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub tau: f64,
    pub theta: f64,
    pub kappa: f64,
    /// Barrier parameter of `𝒦`.
    pub nu: usize,
}

impl HsdState {
    /// `x = s = 𝟙`, `y = 0`, `τ = θ = κ = 1`.
    pub fn initial(cp: &ConicProgram) -> Self {
        let one = cone_unit(&cp.cones());
        Self {
            x: one.clone(),
            y: vec![0.0; cp.num_rows()],
            s: one,
            tau: 1.0,
            theta: 1.0,
            kappa: 1.0,
            nu: cp.barrier_degree(),
        }
    }

    /// `(xᵀs + τκ)/(ν + 1)`.
    pub fn mu(&self) -> f64 {
        (dot(&self.x, &self.s) + self.tau * self.kappa) / (self.nu as f64 + 1.0)
    }

    /// Largest violation of the four linear rows of the embedding, each
    /// relative to the size of its terms.
    pub fn residual(&self, cp: &ConicProgram, emb: &Embedding) -> f64 {
        let r = linear_residuals(cp, emb, self);
        let aty = cp.at_mul(&self.y);
        let ax = cp.a_mul(&self.x);
        let s1 = 1.0 + norm_inf(&aty).max(norm_inf(&self.s)).max(self.tau * norm_inf(cp.c())).max(self.theta * norm_inf(&emb.r_d));
        let s2 = 1.0 + norm_inf(&ax).max(self.tau * norm_inf(cp.b())).max(self.theta * norm_inf(&emb.r_p));
        let s3 = 1.0 + dot(cp.c(), &self.x).abs().max(dot(cp.b(), &self.y).abs()).max(self.kappa);
        let s4 = emb.nu as f64 + 1.0;
        (norm_inf(&r.0) / s1).max(norm_inf(&r.1) / s2).max(r.2.abs() / s3).max(r.3.abs() / s4)
    }

    /// `(μ − θ)` relative to `μ`: the skew-symmetry identity `θ = μ`.
    pub fn theta_identity_error(&self) -> f64 {
        let mu = self.mu();
        (self.theta - mu).abs() / mu.max(f64::MIN_POSITIVE)
    }
}

/// Residuals of the rows `𝐀ᵀy − 𝐜τ − r_dθ + s`, `−𝐀x + 𝐛τ − r_pθ`,
/// `𝐜ᵀx − 𝐛ᵀy − r_cθ + κ`, `r_dᵀx + r_pᵀy + r_cτ − (ν+1)`.
fn linear_residuals(cp: &ConicProgram, emb: &Embedding, st: &HsdState) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let aty = cp.at_mul(&st.y);
    let r1 = (0..aty.len())
        .map(|i| aty[i] - cp.c()[i] * st.tau - emb.r_d[i] * st.theta + st.s[i])
        .collect();
    let ax = cp.a_mul(&st.x);
    let r2 = (0..ax.len())
        .map(|i| -ax[i] + cp.b()[i] * st.tau - emb.r_p[i] * st.theta)
        .collect();
    let r3 = dot(cp.c(), &st.x) - dot(cp.b(), &st.y) - emb.r_c * st.theta + st.kappa;
    let r4 = dot(&emb.r_d, &st.x) + dot(&emb.r_p, &st.y) + emb.r_c * st.tau - (emb.nu as f64 + 1.0);
    (r1, r2, r3, r4)
}

/// Outcome of the short-step stopping test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Continue,
    Optimal,
    Infeasible,
}

/// `μ ≤ ε` together with `τκ ≥ γε` is optimal; `μ ≤ ε` with `τκ < γε`
/// signals infeasibility.
pub fn terminate_rule(mu: f64, tau: f64, kappa: f64, eps: f64) -> Termination {
    if mu > eps {
        Termination::Continue
    } else if tau * kappa >= GAMMA * eps {
        Termination::Optimal
    } else {
        Termination::Infeasible
    }
}

pub fn terminate_check(state: &HsdState, eps: f64) -> Termination {
    terminate_rule(state.mu(), state.tau, state.kappa, eps)
}

/// Newton step of the embedding.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Direction {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub ds: Vec<f64>,
    pub dtau: f64,
    pub dtheta: f64,
    pub dkappa: f64,
}

/// Right-hand sides of the linearized embedding:
/// `𝐀ᵀΔy − 𝐜Δτ − r_dΔθ + Δs = p1`, `−𝐀Δx + 𝐛Δτ − r_pΔθ = p2`,
/// `𝐜ᵀΔx − 𝐛ᵀΔy − r_cΔθ + Δκ = p3`, `r_dᵀΔx + r_pᵀΔy + r_cΔτ = p4`,
/// `Δs + ∇²f(w)Δx = pc`, `Δκ + Δτ/D₀ = p0`.
struct Rhs {
    p1: Vec<f64>,
    p2: Vec<f64>,
    p3: f64,
    p4: f64,
    pc: Vec<f64>,
    p0: f64,
}

impl Rhs {
    fn norm_inf(&self) -> f64 {
        norm_inf(&self.p1).max(norm_inf(&self.p2)).max(norm_inf(&self.pc)).max(self.p3.abs()).max(self.p4.abs()).max(self.p0.abs())
    }
}

/// Solutions for the `𝐜` and `r_d` columns and the 2×2 block; these do not
/// depend on the right-hand side, so refinement costs one Schur solve.
struct Reduced<'a> {
    cp: &'a ConicProgram,
    emb: &'a Embedding,
    cones: Vec<Cone>,
    w: &'a ScalingPoint,
    winv: ScalingPoint,
    sys: &'a SchurSystem,
    big_d0: f64,
    v2: Vec<f64>,
    v3: Vec<f64>,
    u2: Vec<f64>,
    u3: Vec<f64>,
    m: [f64; 4],
}

impl<'a> Reduced<'a> {
    fn new(cp: &'a ConicProgram, emb: &'a Embedding, st: &HsdState, w: &'a ScalingPoint, sys: &'a SchurSystem) -> Result<Self> {
        let cones = cp.cones();
        let winv = w.inverse();
        let big_d0 = st.tau / st.kappa;
        let dmul = |v: &[f64]| hessian_apply(&winv, v, &cones);
        let ad_c = cp.a_mul(&dmul(cp.c())?);
        let ad_r = cp.a_mul(&dmul(&emb.r_d)?);
        let v2 = sys.solve(&ad_c.iter().zip(cp.b()).map(|(a, b)| -b - a).collect::<Vec<_>>())?;
        let v3 = sys.solve(&axpy(&emb.r_p, &ad_r, -1.0))?;
        let u2 = dmul(&axpy(cp.c(), &cp.at_mul(&v2), 1.0))?;
        let u3 = dmul(&axpy(&emb.r_d, &cp.at_mul(&v3), 1.0))?;
        let (c, b) = (cp.c(), cp.b());
        let m = [
            -dot(c, &u2) + dot(b, &v2) - 1.0 / big_d0,
            -dot(c, &u3) + dot(b, &v3) - emb.r_c,
            -dot(&emb.r_d, &u2) - dot(&emb.r_p, &v2) + emb.r_c,
            -dot(&emb.r_d, &u3) - dot(&emb.r_p, &v3),
        ];
        Ok(Self { cp, emb, cones, w, winv, sys, big_d0, v2, v3, u2, u3, m })
    }

    fn solve(&self, r: &Rhs) -> Result<Direction> {
        let (cp, emb) = (self.cp, self.emb);
        let (c, b) = (cp.c(), cp.b());
        let dp = axpy(&r.pc, &r.p1, -1.0);
        let ad_d = cp.a_mul(&hessian_apply(&self.winv, &dp, &self.cones)?);
        let rhs1: Vec<f64> = ad_d.iter().zip(&r.p2).map(|(a, p)| -a - p).collect();
        let v1 = self.sys.solve(&rhs1)?;
        let u1 = hessian_apply(&self.winv, &axpy(&dp, &cp.at_mul(&v1), 1.0), &self.cones)?;
        let q1 = r.p3 - r.p0 - dot(c, &u1) + dot(b, &v1);
        let q2 = r.p4 - dot(&emb.r_d, &u1) - dot(&emb.r_p, &v1);
        let [m11, m12, m21, m22] = self.m;
        let det = m11 * m22 - m12 * m21;
        let scale = (m11.abs() + m12.abs()) * (m21.abs() + m22.abs());
        if !(det.abs() > 1e-300 && det.abs() > 1e-15 * scale) {
            return Err(Error::NumericalFailure("singular 2x2 block in the Newton system".into()));
        }
        let dtau = (q1 * m22 - m12 * q2) / det;
        let dtheta = (m11 * q2 - m21 * q1) / det;
        let dy: Vec<f64> = (0..v1.len()).map(|i| v1[i] - self.v2[i] * dtau - self.v3[i] * dtheta).collect();
        let dx: Vec<f64> = (0..u1.len()).map(|i| u1[i] - self.u2[i] * dtau - self.u3[i] * dtheta).collect();
        let hdx = hessian_apply(self.w, &dx, &self.cones)?;
        let ds = r.pc.iter().zip(&hdx).map(|(a, h)| a - h).collect();
        let dkappa = r.p0 - dtau / self.big_d0;
        Ok(Direction { dx, dy, ds, dtau, dtheta, dkappa })
    }

    /// `rhs − (system applied to dir)`.
    fn residual(&self, r: &Rhs, d: &Direction) -> Result<Rhs> {
        let (cp, emb) = (self.cp, self.emb);
        let (c, b) = (cp.c(), cp.b());
        let aty = cp.at_mul(&d.dy);
        let p1 = (0..aty.len())
            .map(|i| r.p1[i] - (aty[i] - c[i] * d.dtau - emb.r_d[i] * d.dtheta + d.ds[i]))
            .collect();
        let ax = cp.a_mul(&d.dx);
        let p2 = (0..ax.len())
            .map(|i| r.p2[i] - (-ax[i] + b[i] * d.dtau - emb.r_p[i] * d.dtheta))
            .collect();
        let p3 = r.p3 - (dot(c, &d.dx) - dot(b, &d.dy) - emb.r_c * d.dtheta + d.dkappa);
        let p4 = r.p4 - (dot(&emb.r_d, &d.dx) + dot(&emb.r_p, &d.dy) + emb.r_c * d.dtau);
        let hdx = hessian_apply(self.w, &d.dx, &self.cones)?;
        let pc = (0..hdx.len()).map(|i| r.pc[i] - (d.ds[i] + hdx[i])).collect();
        let p0 = r.p0 - (d.dkappa + d.dtau / self.big_d0);
        Ok(Rhs { p1, p2, p3, p4, pc, p0 })
    }
}

/// Solves the linearized embedding with NT scaling at `w` and centering
/// target `μ⁺`. `sys` must hold the factored `𝐀∇²f(w)⁻¹𝐀ᵀ`. Residuals of
/// the linear rows are folded into the right-hand sides so drift is
/// corrected rather than accumulated, and refinement passes on the full
/// system recover accuracy lost to conditioning near the optimum.
pub fn newton_direction(
    cp: &ConicProgram,
    emb: &Embedding,
    st: &HsdState,
    w: &ScalingPoint,
    mu_plus: f64,
    sys: &SchurSystem,
) -> Result<Direction> {
    let red = Reduced::new(cp, emb, st, w, sys)?;
    let grad = neg_barrier_grad(&st.x, &red.cones)?;
    let (r1, r2, r3, r4) = linear_residuals(cp, emb, st);
    let rhs = Rhs {
        p1: r1.iter().map(|v| -v).collect(),
        p2: r2.iter().map(|v| -v).collect(),
        p3: -r3,
        p4: -r4,
        pc: st.s.iter().zip(&grad).map(|(s, g)| -s + mu_plus * g).collect(),
        p0: -st.kappa + mu_plus / st.tau,
    };
    let mut dir = red.solve(&rhs)?;
    let mut last = f64::INFINITY;
    for _ in 0..10 {
        let res = red.residual(&rhs, &dir)?;
        let size = res.norm_inf();
        if !(size < 0.5 * last) || size <= 1e-15 * (1.0 + rhs.norm_inf()) {
            break;
        }
        last = size;
        let corr = red.solve(&res)?;
        for (a, b) in [(&mut dir.dx, &corr.dx), (&mut dir.dy, &corr.dy), (&mut dir.ds, &corr.ds)] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        dir.dtau += corr.dtau;
        dir.dtheta += corr.dtheta;
        dir.dkappa += corr.dkappa;
    }
    // Take Δs from the linear row: the centering row only steers, while the
    // linear rows must hold to working precision.
    let aty = cp.at_mul(&dir.dy);
    for i in 0..aty.len() {
        dir.ds[i] = rhs.p1[i] - aty[i] + cp.c()[i] * dir.dtau + emb.r_d[i] * dir.dtheta;
    }
    Ok(dir)
}

fn axpy(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * y).collect()
}

/// Step-length rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepMode {
    /// Unit steps toward `μ⁺ = (1 − 1/(15√(ν+1)))μ`.
    ShortStep,
    /// Backtracking line search toward `μ⁺ = 0.1μ` inside a wide neighbourhood.
    #[default]
    Adaptive,
}

impl std::str::FromStr for StepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "short-step" | "short" => Ok(Self::ShortStep),
            "adaptive" => Ok(Self::Adaptive),
            _ => Err(Error::InvalidArgument(format!("unknown step mode '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IpmOptions {
    pub eps: f64,
    pub mode: StepMode,
    /// Defaults to 500 in adaptive mode and to the short-step bound otherwise.
    pub max_iter: Option<usize>,
    pub schur_ordering: SchurOrdering,
    /// Wide-neighbourhood constant: `λ_min(XS), τκ ≥ β·μ`.
    pub beta: f64,
    /// Centering factor in adaptive mode.
    pub sigma: f64,
    /// Looser tolerance accepted when the iteration stalls.
    pub fallback_eps: f64,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            eps: 1e-8,
            mode: StepMode::Adaptive,
            max_iter: None,
            schur_ordering: SchurOrdering::Natural,
            beta: 0.05,
            sigma: 0.1,
            fallback_eps: 1e-5,
        }
    }
}

/// Iteration bound for the short-step method from `μ₀ = 1`.
pub fn short_step_bound(nu: usize, eps: f64) -> usize {
    let n1 = nu as f64 + 1.0;
    (15.0 * n1.sqrt() * (n1 / eps).ln()).ceil() as usize + 5
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    /// Met the fallback tolerance only.
    AlmostOptimal,
    /// `τ → 0` with `κ` bounded away; `(x, y)` is a Farkas-like ray.
    Infeasible,
    IterationLimit,
}

/// One line of the iteration trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub mu: f64,
    pub alpha: f64,
    pub tau: f64,
    pub kappa: f64,
    pub pinf: f64,
    pub dinf: f64,
    pub gap: f64,
    pub t_assemble_s: f64,
    pub t_factor_s: f64,
    pub t_solve_s: f64,
    #[serde(rename = "nnz_L")]
    pub nnz_l: usize,
    /// Nonzeros of `L` outside `E⁽²⁾` in this factorization.
    pub fill: usize,
}

/// Relative infeasibilities of `(x/τ, y/τ, s/τ)` for the conic pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Infeasibility {
    pub pinf: f64,
    pub dinf: f64,
    pub gap: f64,
}

impl Infeasibility {
    pub fn max(&self) -> f64 {
        self.pinf.max(self.dinf).max(self.gap)
    }
}

pub fn practical_measures(cp: &ConicProgram, st: &HsdState) -> Infeasibility {
    let t = st.tau;
    let ax = cp.a_mul(&st.x);
    let pinf = ax.iter().zip(cp.b()).map(|(a, b)| (a / t - b).abs()).fold(0.0, f64::max) / (1.0 + norm_inf(cp.b()));
    let aty = cp.at_mul(&st.y);
    let dinf = (0..aty.len())
        .map(|i| ((aty[i] + st.s[i]) / t - cp.c()[i]).abs())
        .fold(0.0, f64::max)
        / (1.0 + norm_inf(cp.c()));
    let p = dot(cp.c(), &st.x) / t;
    let d = dot(cp.b(), &st.y) / t;
    let gap = (p - d).abs() / (1.0 + p.abs() + d.abs());
    Infeasibility { pinf, dinf, gap }
}

#[derive(Clone, Debug)]
pub struct IpmSolution {
    /// `x/τ` (or the raw ray when infeasible).
    pub x: Vec<f64>,
    /// `y/τ` (or the raw ray when infeasible).
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub status: Status,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    pub state: HsdState,
    pub measures: Infeasibility,
    pub stats: FactorStats,
    /// Structural fill of `chol(E⁽²⁾)` in the chosen ordering.
    pub structural_fill: usize,
    /// Largest relative embedding residual seen over the run.
    pub max_residual: f64,
}

impl IpmSolution {
    /// `𝐜ᵀx`, the primal objective of the conic program.
    pub fn primal_objective(&self, cp: &ConicProgram) -> f64 {
        dot(cp.c(), &self.x)
    }

    /// `𝐛ᵀy`, the dual objective of the conic program.
    pub fn dual_objective(&self, cp: &ConicProgram) -> f64 {
        dot(cp.b(), &self.y)
    }
}

/// Membership of `st + αΔ` in the wide neighbourhood, without forming it.
struct Ray<'a> {
    st: &'a HsdState,
    dir: &'a Direction,
    cones: &'a [Cone],
    /// `xᵀs`, `xᵀΔs + Δxᵀs` and `ΔxᵀΔs`.
    dots: [f64; 3],
    first: usize,
}

impl<'a> Ray<'a> {
    fn new(st: &'a HsdState, dir: &'a Direction, cones: &'a [Cone]) -> Self {
        let dots = [dot(&st.x, &st.s), dot(&st.x, &dir.ds) + dot(&dir.dx, &st.s), dot(&dir.dx, &dir.ds)];
        Self { st, dir, cones, dots, first: 0 }
    }

    fn in_neighbourhood(&mut self, alpha: f64, beta: f64) -> bool {
        let (st, dir) = (self.st, self.dir);
        let tau = st.tau + alpha * dir.dtau;
        let kappa = st.kappa + alpha * dir.dkappa;
        if !(tau > 0.0 && kappa > 0.0) {
            return false;
        }
        let [d0, d1, d2] = self.dots;
        let mu = (d0 + alpha * d1 + alpha * alpha * d2 + tau * kappa) / (st.nu as f64 + 1.0);
        if !(mu > 0.0 && tau * kappa >= beta * mu) {
            return false;
        }
        complementarity_at_least((&st.x, &dir.dx), (&st.s, &dir.ds), alpha, self.cones, 1e-12, beta * mu, &mut self.first)
    }
}

fn step(st: &HsdState, dir: &Direction, alpha: f64) -> HsdState {
    let upd = |v: &[f64], d: &[f64]| v.iter().zip(d).map(|(a, b)| a + alpha * b).collect();
    HsdState {
        x: upd(&st.x, &dir.dx),
        y: upd(&st.y, &dir.dy),
        s: upd(&st.s, &dir.ds),
        tau: st.tau + alpha * dir.dtau,
        theta: st.theta + alpha * dir.dtheta,
        kappa: st.kappa + alpha * dir.dkappa,
        nu: st.nu,
    }
}

const STALL_ITERS: usize = 5;

/// Runs the embedding from its canonical initial point.
pub fn ipm_solve(cp: &ConicProgram, opts: &IpmOptions) -> Result<IpmSolution> {
    let cones = cp.cones();
    let emb = Embedding::new(cp);
    let nu = emb.nu;
    let max_iter = opts.max_iter.unwrap_or(match opts.mode {
        StepMode::Adaptive => 500,
        StepMode::ShortStep => short_step_bound(nu, opts.eps),
    });
    let short_factor = 1.0 - 1.0 / (15.0 * (nu as f64 + 1.0).sqrt());
    let mut sys = SchurSystem::new(cp, opts.schur_ordering);
    let mut st = HsdState::initial(cp);
    let mut trace = Vec::new();
    let mut max_residual = st.residual(cp, &emb);
    let mut stats = sys.stats();
    let mut status = None;
    let mut iter = 0;
    let mut last_alpha = 1.0_f64;
    // Best iterate by practical measures, returned if the iteration stalls.
    let mut best = (practical_measures(cp, &st).max(), st.clone(), 0usize);

    loop {
        let meas = practical_measures(cp, &st);
        let term = terminate_check(&st, opts.eps);
        match opts.mode {
            StepMode::ShortStep => match term {
                Termination::Optimal => status = Some(Status::Optimal),
                Termination::Infeasible => status = Some(Status::Infeasible),
                Termination::Continue => {}
            },
            StepMode::Adaptive => {
                if meas.max() <= opts.eps {
                    status = Some(Status::Optimal);
                } else if term != Termination::Continue && st.tau < st.kappa {
                    status = Some(Status::Infeasible);
                }
            }
        }
        if status.is_some() {
            break;
        }
        if opts.mode == StepMode::Adaptive && iter >= best.2 + STALL_ITERS && st.mu() <= opts.eps {
            log::debug!("iteration {iter}: no progress since iteration {}", best.2);
            break;
        }
        if iter >= max_iter {
            status = Some(Status::IterationLimit);
            break;
        }

        let mu = st.mu();
        let mu_plus = match opts.mode {
            StepMode::ShortStep => short_factor * mu,
            StepMode::Adaptive => opts.sigma.max((1.0 - last_alpha).powi(2)).min(0.9) * mu,
        };
        let outcome = (|| -> Result<(Direction, f64, f64, f64)> {
            let w = nt_scaling(&st.x, &st.s, &cones)?;
            let t0 = Instant::now();
            sys.assemble(cp, &w.inverse())?;
            let ta = seconds_since(t0);
            let t1 = Instant::now();
            stats = sys.factor()?;
            let tf = seconds_since(t1);
            let t2 = Instant::now();
            let dir = newton_direction(cp, &emb, &st, &w, mu_plus, &sys)?;
            Ok((dir, ta, tf, seconds_since(t2)))
        })();
        let (dir, ta, tf, ts) = match outcome {
            Ok(v) => v,
            Err(e) if opts.mode == StepMode::Adaptive => {
                log::debug!("iteration {iter}: {e}; stopping");
                break;
            }
            Err(e) => return Err(e),
        };

        let alpha = match opts.mode {
            StepMode::ShortStep => 1.0,
            StepMode::Adaptive => {
                let mut amax = max_step(&st.x, &dir.dx, &cones)?.min(max_step(&st.s, &dir.ds, &cones)?);
                if dir.dtau < 0.0 {
                    amax = amax.min(-st.tau / dir.dtau);
                }
                if dir.dkappa < 0.0 {
                    amax = amax.min(-st.kappa / dir.dkappa);
                }
                let mut a = (0.99 * amax).min(1.0);
                let mut ray = Ray::new(&st, &dir, &cones);
                loop {
                    if ray.in_neighbourhood(a, opts.beta) {
                        break;
                    }
                    a *= 0.8;
                    if a < 1e-10 {
                        break;
                    }
                }
                a
            }
        };
        if alpha < 1e-10 {
            log::debug!("iteration {iter}: step length collapsed");
            break;
        }
        let next = step(&st, &dir, alpha);
        if opts.mode == StepMode::ShortStep && min_complementarity(&next.x, &next.s, &cones, 0.0).is_none() {
            return Err(Error::NumericalFailure(format!("short step left the cone at iteration {iter}")));
        }
        if !(next.tau > 0.0 && next.kappa > 0.0) {
            return Err(Error::NumericalFailure(format!("τ or κ left the positive axis at iteration {iter}")));
        }
        st = next;
        last_alpha = alpha;
        iter += 1;
        max_residual = max_residual.max(st.residual(cp, &emb));
        let m = practical_measures(cp, &st);
        if m.max() < best.0 {
            best = (m.max(), st.clone(), iter);
        }
        let rec = TraceRecord {
            iter,
            mu: st.mu(),
            alpha,
            tau: st.tau,
            kappa: st.kappa,
            pinf: m.pinf,
            dinf: m.dinf,
            gap: m.gap,
            t_assemble_s: ta,
            t_factor_s: tf,
            t_solve_s: ts,
            nnz_l: stats.nnz_l,
            fill: stats.fill,
        };
        log::trace!("{}", serde_json::to_string(&rec).unwrap_or_default());
        trace.push(rec);
    }

    if status.is_none() && opts.mode == StepMode::Adaptive && best.0 < practical_measures(cp, &st).max() {
        st = best.1;
    }
    let measures = practical_measures(cp, &st);
    let status = match status {
        Some(s) => s,
        None if measures.max() <= opts.fallback_eps => Status::AlmostOptimal,
        None if terminate_check(&st, opts.fallback_eps) != Termination::Continue && st.tau < st.kappa => {
            Status::Infeasible
        }
        None => {
            return Err(Error::NumericalFailure(format!(
                "iteration stalled at {iter} with relative residuals {:.2e}",
                measures.max()
            )))
        }
    };
    let (x, y, s) = if status == Status::Infeasible {
        (st.x.clone(), st.y.clone(), st.s.clone())
    } else {
        let t = st.tau;
        (
            st.x.iter().map(|v| v / t).collect(),
            st.y.iter().map(|v| v / t).collect(),
            st.s.iter().map(|v| v / t).collect(),
        )
    };
    Ok(IpmSolution {
        x,
        y,
        s,
        status,
        iterations: iter,
        trace,
        state: st,
        measures,
        stats,
        structural_fill: sys.structural_fill(),
        max_residual,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cycle_graph, Permutation};
    use crate::model::{build_conic, gen_diagonal_sdp, gen_lovasz_theta};

    fn lp() -> ConicProgram {
        let p = gen_diagonal_sdp(&[-1.0, -1.0], &[vec![1.0, 1.0]], &[1.0]).unwrap();
        build_conic(&p, &Permutation::identity(2)).unwrap()
    }

    #[test]
    fn initial_point_is_feasible_and_centred() {
        let cp = lp();
        let emb = Embedding::new(&cp);
        let st = HsdState::initial(&cp);
        assert!(st.residual(&cp, &emb) < 1e-15);
        assert!((st.mu() - 1.0).abs() < 1e-15);
        assert_eq!(terminate_check(&st, 0.5), Termination::Continue);
    }

    #[test]
    fn centred_direction_vanishes() {
        let cp = lp();
        let emb = Embedding::new(&cp);
        let st = HsdState::initial(&cp);
        let w = nt_scaling(&st.x, &st.s, &cp.cones()).unwrap();
        let mut sys = SchurSystem::new(&cp, SchurOrdering::Natural);
        sys.assemble(&cp, &w.inverse()).unwrap();
        sys.factor().unwrap();
        let d = newton_direction(&cp, &emb, &st, &w, 1.0, &sys).unwrap();
        let big = norm_inf(&d.dx).max(norm_inf(&d.dy)).max(norm_inf(&d.ds));
        assert!(big < 1e-12 && d.dtau.abs() < 1e-12 && d.dtheta.abs() < 1e-12, "{d:?}");
    }

    #[test]
    fn terminate_rule_branches() {
        assert_eq!(terminate_rule(1e-9, 1.0, 0.95e-9, 1e-9), Termination::Optimal);
        assert_eq!(terminate_rule(1e-7, 1e-8, 1.0, 1e-6), Termination::Infeasible);
    }

    #[test]
    fn lp_objective() {
        let cp = lp();
        for mode in [StepMode::Adaptive, StepMode::ShortStep] {
            let opts = IpmOptions { mode, eps: 1e-7, ..Default::default() };
            let sol = ipm_solve(&cp, &opts).unwrap();
            assert_eq!(sol.status, Status::Optimal);
            // The SDP optimum is the negated dual objective of the conic program.
            assert!((-sol.dual_objective(&cp) - (-1.0)).abs() < 1e-5, "{mode:?}");
        }
    }

    #[test]
    fn theta_of_pentagon() {
        let p = gen_lovasz_theta(&cycle_graph(5)).unwrap();
        let cp = build_conic(&p, &Permutation::identity(6)).unwrap();
        let sol = ipm_solve(&cp, &IpmOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.dual_objective(&cp) - 5f64.sqrt()).abs() < 1e-6);
        assert!(sol.max_residual < 1e-10, "{} {}", sol.max_residual, sol.iterations);
    }

    fn perturbed_state(cp: &ConicProgram, emb: &Embedding, steps: usize) -> HsdState {
        let mut st = HsdState::initial(cp);
        let cones = cp.cones();
        for _ in 0..steps {
            let w = nt_scaling(&st.x, &st.s, &cones).unwrap();
            let mut sys = SchurSystem::new(cp, SchurOrdering::Natural);
            sys.assemble(cp, &w.inverse()).unwrap();
            sys.factor().unwrap();
            let d = newton_direction(cp, emb, &st, &w, 0.3 * st.mu(), &sys).unwrap();
            st = step(&st, &d, 0.5);
        }
        st
    }

    #[test]
    fn direction_satisfies_linearized_rows_and_is_orthogonal() {
        let p = gen_lovasz_theta(&cycle_graph(6)).unwrap();
        let cp = build_conic(&p, &Permutation::identity(7)).unwrap();
        let emb = Embedding::new(&cp);
        let st = perturbed_state(&cp, &emb, 3);
        let cones = cp.cones();
        let w = nt_scaling(&st.x, &st.s, &cones).unwrap();
        let mut sys = SchurSystem::new(&cp, SchurOrdering::Amd);
        sys.assemble(&cp, &w.inverse()).unwrap();
        sys.factor().unwrap();
        let mu_plus = 0.2 * st.mu();
        let d = newton_direction(&cp, &emb, &st, &w, mu_plus, &sys).unwrap();
        let next = step(&st, &d, 1.0);
        assert!(next.residual(&cp, &emb) < 1e-12);
        let hdx = hessian_apply(&w, &d.dx, &cones).unwrap();
        let grad = neg_barrier_grad(&st.x, &cones).unwrap();
        let cent = (0..hdx.len())
            .map(|i| (st.s[i] + d.ds[i] + hdx[i] - mu_plus * grad[i]).abs())
            .fold(0.0, f64::max);
        assert!(cent < 1e-8, "{cent}");
        let k = st.kappa + d.dkappa + st.kappa / st.tau * d.dtau - mu_plus / st.tau;
        assert!(k.abs() < 1e-10);
        let orth = dot(&d.dx, &d.ds) + d.dtau * d.dkappa;
        assert!(orth.abs() < 1e-10, "{orth}");
    }

    #[test]
    fn short_step_contracts_mu_exactly() {
        let cp = lp();
        let nu = cp.barrier_degree() as f64;
        let f = 1.0 - 1.0 / (15.0 * (nu + 1.0).sqrt());
        let sol = ipm_solve(&cp, &IpmOptions { mode: StepMode::ShortStep, eps: 1e-4, ..Default::default() }).unwrap();
        let mut prev = 1.0;
        for r in &sol.trace {
            assert!((r.mu / prev - f).abs() < 1e-12, "{}", r.mu / prev - f);
            prev = r.mu;
        }
        assert!(sol.iterations <= short_step_bound(cp.barrier_degree(), 1e-4));
    }
}
