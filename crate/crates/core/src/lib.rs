//! Chordal conversion for sparse semidefinite programs.
//!
//! An SDP whose data share a sparse aggregate pattern is rewritten so that
//! only the principal submatrices indexed by the columns of a symbolic
//! Cholesky factor are constrained to be positive semidefinite. The
//! converted problem is solved by a homogeneous self-dual interior-point
//! method whose Schur complement stays sparse, and a low-rank factor of a
//! full primal solution is recovered afterwards.

pub mod bench;
pub mod convert;
pub mod error;
pub mod graph;
pub mod ipm;
pub mod lift;
pub mod matrix;
pub mod model;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
