//! Exact master-equation bench for the two-species spin chain.
//!
//! Operators are sparse (`SparseOp`), density matrices dense. Both symmetry
//! variants of the dissipator are available, together with the checks of
//! their charge and dipole algebra.

mod checks;
mod master;
mod model;
mod ops;

pub use checks::{
    block_diagonal_part, commutator_norm, expectation, jump_commutators, random_density,
    random_hermitian, sector_leak, sector_states, spin_correlator, symmetry_unitary,
    weak_symmetry_check, SYMMETRY_PROBES, SYMMETRY_SEED,
};
pub use master::{
    dissipator_apply, evolve, evolve_with, stationarity_residual, steady_state_by_evolution,
    steady_state_by_kernel, trace_distance, DensityMatrix, EvolveOptions, Generator,
    SteadyStateOptions, HERMITICITY_TOL, NULLSPACE_DIM_CAP, POSITIVITY_TOL, TRACE_DRIFT_TOL,
    TRACE_TOL,
};
pub use model::{
    build_operators, jump_operators, Jump, Operators, Rates, SpinModelSpec, SymmetryMode,
    DEFAULT_DIMENSION_CAP,
};
pub use ops::{max_modulus, spin_matrices, CMatrix, SparseOp};

#[cfg(test)]
mod tests;
