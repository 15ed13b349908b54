//! Incompressible flow on moving domains with the stabilized space-time
//! finite element method and a virtual-ring shear-slip mesh update.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`] holds 2D meshes, space-time slabs, element validity and quadrature.
//! * [`vring`] builds the closed moving ring with its update layers and runs the
//!   per-step shear, slip, shift, activation and lateral-boundary pipeline.
//! * [`assembly`] evaluates the stabilized weak form on one slab and produces the
//!   Newton system.
//! * [`solver`] contains the sparse linear solvers, the per-slab Newton iteration
//!   and the time loop.
//! * [`io`] and [`cases`] provide file formats, configuration and the two shipped
//!   cases (Couette validation and a 2D packaging machine).

pub mod assembly;
pub mod cases;
pub mod error;
pub mod geom;
pub mod io;
pub mod mesh;
pub mod solver;
pub mod sparse;
pub mod vring;

pub use error::{Error, Result};
