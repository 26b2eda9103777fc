//! Langevin equations for the phase and density fields, and the machinery
//! that integrates them.

mod ensemble;
mod equation;
mod integrator;
mod noise;
mod tilt;

pub use ensemble::{
    collect_records, derive_seed, map_realizations, run_ensemble, run_ensemble_many,
    run_trajectory, run_trajectory_with, EnsembleSeries, InitialCondition, Observable, RunSpec,
};
pub use equation::{rhs_deterministic, stability_limit, EquationSpec, Variant};
pub use integrator::{geometric_schedule, step, IntegratorSpec, Scheme, Stepper, OVERFLOW_GUARD};
pub use noise::{sample_noise, NoiseSampler};
pub use tilt::{tilt_drift, tilt_residual, tilt_transform, TiltCheck};
