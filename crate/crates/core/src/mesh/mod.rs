//! Unstructured 2D meshes and their extrusion into space-time slabs.

mod quadrature;
pub mod shape;
mod slab;
mod structured;

use std::collections::HashMap;

use crate::geom::{dot, polygon_area, Point};
use crate::{Error, Result};

pub use quadrature::{
    gauss2, reference_volume, spacetime_quadrature, spatial_rule, QuadPoint, QuadratureRule,
};
pub use structured::{linspace, structured_grid, Side};
pub use slab::{check_element_validity, extrude_slab, st_jacobian, ElementValidity, SpaceTimeSlab, StJacobian};

/// Block id carried by static elements and by update-layer elements.
pub const STATIC_BLOCK: i32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Tri3,
    Quad4,
}

impl Shape {
    pub fn node_count(self) -> usize {
        match self {
            Shape::Tri3 => 3,
            Shape::Quad4 => 4,
        }
    }

    pub fn reference_area(self) -> f64 {
        match self {
            Shape::Tri3 => 0.5,
            Shape::Quad4 => 4.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Tri3 => "tri3",
            Shape::Quad4 => "quad4",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tri3" => Some(Shape::Tri3),
            "quad4" => Some(Shape::Quad4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub shape: Shape,
    pub nodes: Vec<usize>,
    /// 0 for static and update-layer elements, `1..=n_blocks+1` for moving blocks
    /// (the last one being the virtual copy).
    pub block_id: i32,
    pub is_update_layer: bool,
}

impl Element {
    pub fn new(shape: Shape, nodes: Vec<usize>, block_id: i32) -> Self {
        Element {
            shape,
            nodes,
            block_id,
            is_update_layer: false,
        }
    }

    pub fn is_moving(&self) -> bool {
        self.block_id > STATIC_BLOCK
    }

    /// Local edge `k` as a pair of node indices, counter-clockwise.
    pub fn edge(&self, k: usize) -> (usize, usize) {
        let n = self.nodes.len();
        (self.nodes[k], self.nodes[(k + 1) % n])
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryFace {
    pub element: usize,
    pub edge: usize,
    pub marker: String,
}

impl BoundaryFace {
    pub fn new(element: usize, edge: usize, marker: impl Into<String>) -> Self {
        BoundaryFace {
            element,
            edge,
            marker: marker.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh2D {
    pub node_coords: Vec<Point>,
    pub elements: Vec<Element>,
    pub boundary_faces: Vec<BoundaryFace>,
}

/// Undirected edge key.
pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh2D {
    pub fn node_count(&self) -> usize {
        self.node_coords.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn element_points(&self, e: usize, coords: &[Point]) -> Vec<Point> {
        self.elements[e].nodes.iter().map(|&n| coords[n]).collect()
    }

    /// Signed area of element `e` for the given nodal coordinates.
    pub fn element_area(&self, e: usize, coords: &[Point]) -> f64 {
        polygon_area(&self.element_points(e, coords))
    }

    /// Checks the structural invariants: node references exist, faces reference
    /// real boundary edges and every element has positive reference area.
    pub fn validate(&self) -> Result<()> {
        self.validate_topology()?;
        for i in 0..self.element_count() {
            let area = self.element_area(i, &self.node_coords);
            if !(area > 0.0) {
                return Err(Error::Structural(format!(
                    "element {i} has non-positive area {area:e}"
                )));
            }
        }
        Ok(())
    }

    /// The index and face checks of [`Mesh2D::validate`], without areas.
    pub fn validate_topology(&self) -> Result<()> {
        let n = self.node_count();
        for (i, el) in self.elements.iter().enumerate() {
            if el.nodes.len() != el.shape.node_count() {
                return Err(Error::Structural(format!(
                    "element {i} is {} but lists {} nodes",
                    el.shape.name(),
                    el.nodes.len()
                )));
            }
            if let Some(&bad) = el.nodes.iter().find(|&&k| k >= n) {
                return Err(Error::Structural(format!(
                    "element {i} references node {bad} but the mesh has {n} nodes"
                )));
            }
        }
        let counts = self.edge_use_counts();
        for (k, f) in self.boundary_faces.iter().enumerate() {
            let el = self.elements.get(f.element).ok_or_else(|| {
                Error::Structural(format!("face {k} references missing element {}", f.element))
            })?;
            if f.edge >= el.edge_count() {
                return Err(Error::Structural(format!(
                    "face {k} references edge {} of a {}",
                    f.edge,
                    el.shape.name()
                )));
            }
            let (a, b) = el.edge(f.edge);
            if counts.get(&edge_key(a, b)).copied().unwrap_or(0) != 1 {
                return Err(Error::Structural(format!(
                    "face {k} ({a},{b}) is not a boundary edge of exactly one element"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn edge_use_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::new();
        for el in &self.elements {
            for k in 0..el.edge_count() {
                let (a, b) = el.edge(k);
                *counts.entry(edge_key(a, b)).or_insert(0) += 1;
            }
        }
        counts
    }

    /// For every element and local edge, the element on the other side (if any).
    pub fn edge_neighbors(&self) -> Vec<Vec<Option<usize>>> {
        let mut owners: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (i, el) in self.elements.iter().enumerate() {
            for k in 0..el.edge_count() {
                let (a, b) = el.edge(k);
                owners.entry(edge_key(a, b)).or_default().push(i);
            }
        }
        self.elements
            .iter()
            .enumerate()
            .map(|(i, el)| {
                (0..el.edge_count())
                    .map(|k| {
                        let (a, b) = el.edge(k);
                        owners[&edge_key(a, b)].iter().copied().find(|&o| o != i)
                    })
                    .collect()
            })
            .collect()
    }

    /// Nodes referenced by at least one moving-block element.
    pub fn moving_node_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.node_count()];
        for el in self.elements.iter().filter(|e| e.is_moving()) {
            for &n in &el.nodes {
                flags[n] = true;
            }
        }
        flags
    }
}

/// Smallest extent of any element along `direction`: per element the spread of
/// its nodal coordinates projected on the direction.
pub fn min_element_extent(mesh: &Mesh2D, direction: Point) -> Result<f64> {
    min_extent_of(mesh, direction, |_| true)
}

pub(crate) fn min_extent_of(
    mesh: &Mesh2D,
    direction: Point,
    select: impl Fn(&Element) -> bool,
) -> Result<f64> {
    mesh.elements
        .iter()
        .filter(|e| select(e))
        .map(|el| {
            let (lo, hi) = el.nodes.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &n| {
                let s = dot(mesh.node_coords[n], direction);
                (lo.min(s), hi.max(s))
            });
            hi - lo
        })
        .reduce(f64::min)
        .ok_or_else(|| Error::Structural("mesh has no elements".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Mesh2D {
        Mesh2D {
            node_coords: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            elements: vec![Element::new(Shape::Quad4, vec![0, 1, 2, 3], 0)],
            boundary_faces: vec![BoundaryFace::new(0, 0, "bottom")],
        }
    }

    #[test]
    fn extent_of_unit_square_and_triangle() {
        assert_eq!(min_element_extent(&unit_square(), [1.0, 0.0]).unwrap(), 1.0);
        let tri = Mesh2D {
            node_coords: vec![[0.0, 0.0], [0.02, 0.0], [0.0, 0.02]],
            elements: vec![Element::new(Shape::Tri3, vec![0, 1, 2], 0)],
            boundary_faces: vec![],
        };
        assert!((min_element_extent(&tri, [1.0, 0.0]).unwrap() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn extent_of_empty_mesh_is_an_error() {
        assert!(matches!(
            min_element_extent(&Mesh2D::default(), [1.0, 0.0]),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn validate_rejects_dangling_nodes_and_interior_faces() {
        let mut m = unit_square();
        m.validate().unwrap();
        m.elements[0].nodes[2] = 9;
        assert!(m.validate().is_err());

        let mut two = Mesh2D {
            node_coords: vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [0.0, 1.0]],
            elements: vec![
                Element::new(Shape::Quad4, vec![0, 1, 4, 5], 0),
                Element::new(Shape::Quad4, vec![1, 2, 3, 4], 0),
            ],
            boundary_faces: vec![],
        };
        two.validate().unwrap();
        // Edge 1 of element 0 is (1,4), shared with element 1.
        two.boundary_faces.push(BoundaryFace::new(0, 1, "bad"));
        assert!(two.validate().is_err());
    }

    #[test]
    fn validate_rejects_inverted_elements() {
        let mut m = unit_square();
        m.elements[0].nodes = vec![0, 3, 2, 1];
        assert!(m.validate().is_err());
    }
}
