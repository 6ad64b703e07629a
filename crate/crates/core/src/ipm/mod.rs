//! Homogeneous self-dual interior-point method on the converted program.

pub(crate) mod chol;
mod cones;
mod hsd;
mod schur;

pub use cones::{cone_unit, hessian_apply, hessian_inv_apply, nt_scaling, BlockScaling, ScalingPoint};
pub use hsd::*;
pub use schur::{FactorStats, SchurOrdering, SchurSystem};

#[allow(unused_imports)]
pub(crate) use cones::{local_idx, max_step, min_complementarity, neg_barrier_grad, smat, svec_into};
