//! The secret projection basis: coding-gain metrics, the relaxed objective,
//! its optimizer, sparse/time expansions and the conventional DFT baseline.

pub mod basis;
pub mod conventional;
pub mod objective;
pub mod optimizer;

pub use basis::{
    angles_to_vector, expand_time, rotate_down, sparse_vector, AngleVector, ProjectionMatrix,
    ProjectionVector,
};
pub use conventional::{conventional_basis, dft_block, ConventionalBasis};
pub use objective::{
    coding_gain_bruteforce, coding_gain_closed, coding_gain_matrix, corner_phase, objective_f,
    objective_gradient, psk_gain, shifted_inner, CodingGain, DEFAULT_PAIRWISE_BITS,
};
pub use optimizer::{
    minimize, optimize_projection, DescentOptions, DescentOutcome, Objective, OptimizedProjection,
    OptimizerOptions, RestartTrace, StepRule, Termination,
};
