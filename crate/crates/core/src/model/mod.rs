//! SDP problems, generators, file formats, and the standard-form program of
//! the converted problem.

mod conic;
mod generators;
mod io;
mod problem;

pub use conic::{build_conic, Cone, ConicProgram};
#[allow(unused_imports)]
pub(crate) use conic::{build_conic_with_factor, SparseCol};
pub use generators::{
    gen_acopf_like, gen_diagonal_sdp, gen_lovasz_theta, gen_max_k_cut, gen_poly_opt, gen_sensor_network,
    hankel_ties, random_diagonal_sdp, random_poly_opt, random_sensor_network,
};
pub use io::{
    read_json_problem, read_problem_file, read_sdpa, read_sdpa_file, sense_sidecar_path, write_json_problem,
    write_problem_file, write_sdpa, write_sdpa_file, write_sense_sidecar,
};
pub use problem::{SdpProblem, Sense};
