//! Sparsity patterns, symbolic factorization, orderings, and tree
//! decompositions.

mod edgelist;
mod families;
mod ktree;
mod ordering;
mod pattern;
mod permutation;
mod symbolic;
mod treedec;

pub use edgelist::{read_edge_list, write_edge_list};
pub use families::{
    complete_graph, cycle_graph, grid_graph, parse_graph_spec, path_graph, square_graph, star_graph,
};
pub use ktree::{random_partial_ktree, PartialKTree};
pub use ordering::min_degree_order;
pub use pattern::SparsityPattern;
pub use permutation::Permutation;
pub use symbolic::{frontsize, permute, symbolic_cholesky, SymbolicFactor};
pub use treedec::{
    peo_from_tree_decomposition, tree_decomposition_of_factor, verify_tree_decomposition,
    TdViolation, TreeDecomposition,
};
