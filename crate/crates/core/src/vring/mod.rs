//! Virtual-ring shear-slip mesh update.
//!
//! The moving part of the domain is built from identical characteristic blocks
//! plus one virtual copy, closed into a ring by identifying the virtual block's
//! downstream trace with the first block's upstream trace. Thin update layers
//! join the ring to the static mesh. Each time step the ring translates (shear),
//! layer connectivity is recreated when an interface node passes `x_crit`
//! (slip), nodes beyond `x_crit` jump back by the ring length (shift) and the
//! active part of the ring is recomputed.

mod build;
mod motion;
mod pipeline;

use std::collections::BTreeMap;

use crate::geom::{dot, Point};
use crate::mesh::Mesh2D;

pub use build::{build_ring, build_update_layer, close_ring, LayerPair, LayerSpec};
pub use motion::MotionProgram;
pub use pipeline::{
    active_area, advance_motion, conform_structured_boundary, needs_connectivity_update,
    place_ring, shift_nodes, slip_step, update_activity, update_lateral_boundaries,
};

/// Marker of the upstream lateral boundary.
pub const GAMMA_IN: &str = "gamma_in";
/// Marker of the downstream lateral boundary.
pub const GAMMA_OUT: &str = "gamma_out";

#[derive(Debug, Clone, PartialEq)]
pub struct RingTopology {
    /// Physical characteristic blocks (the virtual copy is not counted).
    pub n_blocks: usize,
    /// Moving nodes per ring copy after closure (the seam column is shared).
    pub nodes_per_block: usize,
    pub block_length: f64,
    /// `(n_blocks + 1) * block_length`.
    pub ring_length: f64,
    /// Unit vector of the motion.
    pub direction: Point,
    pub x_in: f64,
    pub x_out: f64,
    pub delta: f64,
    /// `x_out + delta`.
    pub x_crit: f64,
    /// Replacement node for every ring-side interface node, used by the slip step.
    pub update_map: BTreeMap<usize, usize>,
    /// Ring-side interface nodes of each update layer, in ring order.
    pub gamma_m_nodes: Vec<Vec<usize>>,
    /// Static-side interface nodes of each update layer, ordered along the motion.
    pub gamma_s_nodes: Vec<Vec<usize>>,
    /// Whether the moving mesh is structured along the motion, enabling boundary snapping.
    pub structured: bool,
    /// Nodes carried by the moving ring.
    pub moving: Vec<bool>,
}

impl RingTopology {
    /// Instances of every block element, one per ring copy (the last is the
    /// virtual copy). Instances are periodic images of each other.
    pub fn element_instances(&self, mesh: &Mesh2D) -> Vec<Vec<usize>> {
        let copies: Vec<Vec<usize>> = (1..=self.n_blocks as i32 + 1)
            .map(|id| (0..mesh.element_count()).filter(|&e| mesh.elements[e].block_id == id).collect())
            .collect();
        (0..copies[0].len()).map(|j| copies.iter().map(|c| c[j]).collect()).collect()
    }

    pub fn project(&self, p: Point) -> f64 {
        dot(p, self.direction)
    }

    /// Geometric tolerance for zone tests.
    #[inline]
    pub fn tol(&self) -> f64 {
        1e-9 * self.block_length
    }

    /// `s` lies strictly beyond `bound` along the motion, ignoring roundoff.
    #[inline]
    pub fn beyond(&self, s: f64, bound: f64) -> bool {
        s > bound + self.tol()
    }

    /// Node activation zone `(x_in + delta, x_crit]`.
    #[inline]
    pub fn in_activation_zone(&self, s: f64) -> bool {
        self.beyond(s, self.x_in + self.delta) && !self.beyond(s, self.x_crit)
    }

    /// An element is torn when its nodes sit on both sides of the ring seam.
    pub fn is_torn(&self, pts: impl IntoIterator<Item = Point>) -> bool {
        let (lo, hi) = pts.into_iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| {
            let s = self.project(p);
            (lo.min(s), hi.max(s))
        });
        hi - lo > 0.5 * self.ring_length
    }

    /// Element points with seam-crossing nodes moved next to the first node,
    /// recovering the element's reference shape on the ring.
    pub fn unwrap_points(&self, pts: &[Point]) -> Vec<Point> {
        let s0 = self.project(pts[0]);
        pts.iter()
            .map(|&p| {
                let ds = self.project(p) - s0;
                let k = (ds / self.ring_length).round();
                [
                    p[0] - k * self.ring_length * self.direction[0],
                    p[1] - k * self.ring_length * self.direction[1],
                ]
            })
            .collect()
    }

    pub fn update_layer_count(&self) -> usize {
        self.gamma_m_nodes.len()
    }
}

/// Activity flags of nodes and elements for the current and previous slab.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityState {
    pub node_active: Vec<bool>,
    pub elem_active: Vec<bool>,
    pub elem_active_prev: Vec<bool>,
    pub node_active_prev: Vec<bool>,
    pub node_shifted: Vec<bool>,
}

impl ActivityState {
    /// Everything active, no history: the state of a mesh without a ring.
    pub fn all_active(n_nodes: usize, n_elems: usize) -> Self {
        ActivityState {
            node_active: vec![true; n_nodes],
            elem_active: vec![true; n_elems],
            elem_active_prev: vec![true; n_elems],
            node_active_prev: vec![true; n_nodes],
            node_shifted: vec![false; n_nodes],
        }
    }

    pub fn active_node_count(&self) -> usize {
        self.node_active.iter().filter(|&&a| a).count()
    }

    pub fn active_element_count(&self) -> usize {
        self.elem_active.iter().filter(|&&a| a).count()
    }

    /// Elements that became active in this slab.
    pub fn newly_active(&self, e: usize) -> bool {
        self.elem_active[e] && !self.elem_active_prev[e]
    }
}
