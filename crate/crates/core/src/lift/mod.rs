//! Vectorization over a factor pattern, clique selectors, and the sparsity
//! patterns of the converted problem and its Schur complement.

mod sparsity;
mod vec;

pub use sparsity::{
    aggregate_sparsity, check_sorted_rip, extended_sparsity, lifted_overestimate, quadratic_lift,
    schur_sparsity, union_of_cliques,
};
#[allow(unused_imports)]
pub(crate) use sparsity::add_clique;
pub use vec::{clique_selectors, CliqueSelector, VecIndexer};
