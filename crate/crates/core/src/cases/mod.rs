//! The shipped simulation cases and the [`Case`] description every run starts from.

mod couette;
mod packaging;

use std::fmt;
use std::sync::Arc;

use crate::assembly::{BCSet, MaterialParams, VectorFn};
use crate::geom::Point;
use crate::mesh::Mesh2D;
use crate::vring::{MotionProgram, RingTopology};

pub use couette::{generate_couette_case, CouetteParams};
pub use packaging::{generate_packaging_case, nozzle_profile, PackagingParams, PACKAGING_PAPER_ELEMENTS};

/// Initial condition `x -> (velocity, pressure)`.
pub type InitialFn = Arc<dyn Fn(Point) -> ([f64; 2], f64) + Send + Sync>;

#[derive(Clone)]
pub struct Case {
    pub name: String,
    pub mesh: Mesh2D,
    pub ring: Option<RingTopology>,
    pub bcs: BCSet,
    pub params: MaterialParams,
    pub motion: MotionProgram,
    pub initial: InitialFn,
    /// Analytic velocity, when one exists.
    pub exact: Option<VectorFn>,
    /// Velocity scale of relative errors.
    pub reference_speed: f64,
    pub dt: f64,
    pub t0: f64,
}

impl fmt::Debug for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Case")
            .field("name", &self.name)
            .field("nodes", &self.mesh.node_count())
            .field("elements", &self.mesh.element_count())
            .field("ring", &self.ring.is_some())
            .field("bcs", &self.bcs)
            .field("dt", &self.dt)
            .finish()
    }
}
