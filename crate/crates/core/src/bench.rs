//! Scaling sweeps: instance construction, per-instance measurements, and a
//! least-squares affine fit of per-iteration time against `m + n`.

use serde::{Deserialize, Serialize};

use crate::convert::{analyze_instance, chordal_convert_solve, ConvertOptions, OrderingSource};
use crate::error::Result;
use crate::graph::{random_partial_ktree, Permutation};
use crate::ipm::IpmOptions;
use crate::model::{gen_lovasz_theta, SdpProblem};

pub const CSV_HEADER: &str = "family,n,m,omega,omega_bar,iters,digits,prep_s,periter_s,post_s";

/// One measured instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub family: String,
    pub n: usize,
    pub m: usize,
    pub omega: usize,
    pub omega_bar: usize,
    pub iters: usize,
    pub digits: f64,
    pub prep_s: f64,
    pub periter_s: f64,
    pub post_s: f64,
    /// Zero-fill of the Schur factor under natural ordering, per analysis.
    pub zero_fill: bool,
    /// Largest numeric fill count seen at solve time.
    pub schur_fill: usize,
    /// Failure message when the instance did not solve.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl BenchRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.3},{:.6},{:.6},{:.6}",
            self.family,
            self.n,
            self.m,
            self.omega,
            self.omega_bar,
            self.iters,
            self.digits,
            self.prep_s,
            self.periter_s,
            self.post_s
        )
    }
}

/// Lovász theta on a random partial `k`-tree with `ratio·d` edges, together
/// with the tree's elimination ordering extended by the apex vertex last.
pub fn theta_ktree_instance(k: usize, d: usize, ratio: f64, seed: u64) -> Result<(SdpProblem, Permutation)> {
    let kt = random_partial_ktree(k, d, Some(ratio), seed)?;
    let p = gen_lovasz_theta(&kt.pattern)?;
    let mut fwd: Vec<usize> = kt.peo.forward();
    fwd.push(d + 1);
    Ok((p, Permutation::new(&fwd)?))
}

/// Solves one instance and records the row; failures are recorded, not
/// propagated.
pub fn measure(family: &str, problem: &SdpProblem, ordering: OrderingSource, ipm: &IpmOptions) -> BenchRow {
    let mut row = BenchRow {
        family: family.to_string(),
        n: problem.n,
        m: problem.m(),
        omega: 0,
        omega_bar: 0,
        iters: 0,
        digits: 0.0,
        prep_s: 0.0,
        periter_s: 0.0,
        post_s: 0.0,
        zero_fill: false,
        schur_fill: 0,
        error: None,
    };
    let perm = match ordering.resolve(problem) {
        Ok(p) => p,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    if let Ok(r) = analyze_instance(problem, &perm) {
        row.zero_fill = r.zero_fill;
    }
    let opts = ConvertOptions { ordering: OrderingSource::Supplied(perm), ipm: ipm.clone() };
    match chordal_convert_solve(problem, &opts) {
        Ok(s) => {
            row.omega = s.omega;
            row.omega_bar = s.omega_bar;
            row.iters = s.iterations;
            row.digits = s.digits.min;
            row.prep_s = s.timings.prep_s;
            row.periter_s = s.timings.periter_s;
            row.post_s = s.timings.post_s;
            row.schur_fill = s.schur_fill;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// `y ≈ slope·x + intercept` by least squares.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_affine(x: &[f64], y: &[f64]) -> AffineFit {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { 1.0 - x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum::<f64>() / syy } else { 1.0 };
    AffineFit { slope, intercept, r2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = fit_affine(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theta_instance_has_apex_last() {
        let (p, perm) = theta_ktree_instance(3, 30, 1.5, 4).unwrap();
        assert_eq!(p.n, 31);
        assert_eq!(perm.apply(31), 31);
        let r = analyze_instance(&p, &perm).unwrap();
        assert!(r.e_equals_ebar && r.zero_fill);
        assert!(r.omega <= 5);
    }
}
