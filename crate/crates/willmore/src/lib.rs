//! Phase-field Willmore flow laboratory.
//!
//! Modules, bottom-up: [`profiles`] (1D stretched-variable profiles and constants),
//! [`geometry`] (interfaces, tubular charts, grids), [`sharp_interface`] (reference
//! interface motion), [`expansion`] (matched-asymptotic approximate solutions),
//! [`pde`] (time integration of the phase-field system), [`spectral`] (decomposition
//! and linearized-operator probes) and [`harness`] (ε sweeps and order fits).

pub mod error;
pub mod expansion;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod pde;
pub mod profiles;
pub mod sharp_interface;
pub mod spectral;

pub use error::{Error, Result};
