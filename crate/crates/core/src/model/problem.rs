use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Permutation;
use crate::matrix::SparseSym;

/// Constraint sense: `⟨A_i, X⟩ ≤ b_i` or `⟨A_i, X⟩ = b_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "le", alias = "<=")]
    Le,
    #[serde(rename = "eq", alias = "=", alias = "==")]
    Eq,
}

/// `min ⟨C,X⟩ s.t. X ⪰ 0, ⟨A_i,X⟩ (≤ or =) b_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    pub n: usize,
    pub c: SparseSym,
    pub a: Vec<SparseSym>,
    pub b: Vec<f64>,
    pub sense: Vec<Sense>,
}

impl SdpProblem {
    /// Builds and validates a problem.
    pub fn new(c: SparseSym, a: Vec<SparseSym>, b: Vec<f64>, sense: Vec<Sense>) -> Result<Self> {
        let p = Self { n: c.order(), c, a, b, sense };
        p.validate()?;
        Ok(p)
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    /// Number of inequality rows once equalities are split in two.
    pub fn rows(&self) -> usize {
        self.sense.iter().map(|s| if *s == Sense::Eq { 2 } else { 1 }).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if self.c.order() != n {
            return Err(Error::DimensionMismatch(format!("cost has order {}, expected {n}", self.c.order())));
        }
        if self.b.len() != self.a.len() || self.sense.len() != self.a.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} constraint matrices, {} right-hand sides, {} senses",
                self.a.len(),
                self.b.len(),
                self.sense.len()
            )));
        }
        for (i, a) in self.a.iter().enumerate() {
            if a.order() != n {
                return Err(Error::DimensionMismatch(format!("A_{} has order {}, expected {n}", i + 1, a.order())));
            }
            if a.is_numerically_zero() {
                return Err(Error::ZeroConstraint(i + 1));
            }
        }
        if let Some(i) = self.b.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("b_{} is not finite", i + 1)));
        }
        Ok(())
    }

    /// The same problem with every matrix reordered as `ΠMΠᵀ`.
    pub fn permuted(&self, p: &Permutation) -> Result<Self> {
        if p.order() != self.n {
            return Err(Error::OrderMismatch { expected: self.n, found: p.order() });
        }
        Ok(Self {
            n: self.n,
            c: self.c.permuted(p),
            a: self.a.iter().map(|a| a.permuted(p)).collect(),
            b: self.b.clone(),
            sense: self.sense.clone(),
        })
    }

    /// Rows `(A, b)` of the all-inequality form: equalities become a `≤`
    /// row followed by its negation. Each entry records the source
    /// constraint (0-based) and its sign.
    pub(crate) fn inequality_rows(&self) -> Vec<(usize, f64)> {
        let mut rows = Vec::with_capacity(self.rows());
        for (i, s) in self.sense.iter().enumerate() {
            rows.push((i, 1.0));
            if *s == Sense::Eq {
                rows.push((i, -1.0));
            }
        }
        rows
    }
}
