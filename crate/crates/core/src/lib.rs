//! Simulation and analysis toolkit for dissipative systems with dipole moment
//! conservation.
//!
//! The crate is organised around four pieces:
//!
//! * [`grid`]: periodic (and open) 1D lattices, stencil operators and the
//!   spectral machinery shared by every integrator.
//! * [`spde`]: the registry of Langevin equations, noise laws, explicit and
//!   semi-implicit steppers, reproducible ensembles and the tilt identity.
//! * [`observables`] and [`scaling`]: roughness, correlators, power-law fits
//!   and finite-size data collapse.
//! * [`lindblad`]: exact dense/sparse construction of the two-species spin
//!   chain, its jump operators, master-equation evolution and symmetry checks.
//!
//! Nothing in this crate performs IO; configuration files, tables and the
//! command line live in the companion `dipolesim` crate.

pub mod error;
pub mod grid;
pub mod lindblad;
pub mod observables;
pub mod scaling;
pub mod spde;
pub mod stats;

pub use error::{Error, Result};
pub use grid::{Boundary, FieldState, Grid1D};
