use super::shape::{self, time_basis};
use super::{spacetime_quadrature, Mesh2D, Shape};
use crate::geom::{norm, sub, Point};
use crate::{Error, Result};

/// Geometric realisation of one space-time slab: every spatial element is
/// paired with its lower (`t_lower`) and upper (`t_upper`) level nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSlab {
    pub lower_coords: Vec<Point>,
    pub upper_coords: Vec<Point>,
    pub t_lower: f64,
    pub t_upper: f64,
}

pub fn extrude_slab(
    mesh: &Mesh2D,
    lower_coords: Vec<Point>,
    upper_coords: Vec<Point>,
    t_n: f64,
    t_np1: f64,
) -> Result<SpaceTimeSlab> {
    let n = mesh.node_count();
    if lower_coords.len() != n || upper_coords.len() != n {
        return Err(Error::Structural(format!(
            "slab coordinate arrays have lengths {} and {}, mesh has {n} nodes",
            lower_coords.len(),
            upper_coords.len()
        )));
    }
    if !(t_np1 > t_n) {
        return Err(Error::Structural(format!(
            "slab interval [{t_n}, {t_np1}] is empty"
        )));
    }
    Ok(SpaceTimeSlab {
        lower_coords,
        upper_coords,
        t_lower: t_n,
        t_upper: t_np1,
    })
}

/// Space-time Jacobian of the map (xi, eta, theta) -> (x, y, t) at one point.
#[derive(Debug, Clone, Copy)]
pub struct StJacobian {
    /// Spatial block `d(x,y)/d(xi,eta)`, row-major.
    pub spatial: [[f64; 2]; 2],
    /// Mesh displacement rate `d(x,y)/d(theta)`.
    pub x_theta: Point,
    pub det: f64,
}

impl StJacobian {
    pub fn spatial_det(&self) -> f64 {
        self.spatial[0][0] * self.spatial[1][1] - self.spatial[0][1] * self.spatial[1][0]
    }
}

pub fn st_jacobian(
    shape: Shape,
    lower: &[Point],
    upper: &[Point],
    dt: f64,
    xi: [f64; 2],
    theta: f64,
) -> StJacobian {
    let s = shape::eval(shape, xi);
    let [tl, tu] = time_basis(theta);
    let mut spatial = [[0.0; 2]; 2];
    let mut x_theta = [0.0; 2];
    for a in 0..s.len {
        for c in 0..2 {
            let xa = tl * lower[a][c] + tu * upper[a][c];
            spatial[c][0] += s.dn[a][0] * xa;
            spatial[c][1] += s.dn[a][1] * xa;
            x_theta[c] += s.n[a] * 0.5 * (upper[a][c] - lower[a][c]);
        }
    }
    let mut j = StJacobian {
        spatial,
        x_theta,
        det: 0.0,
    };
    j.det = j.spatial_det() * 0.5 * dt;
    j
}

impl SpaceTimeSlab {
    pub fn dt(&self) -> f64 {
        self.t_upper - self.t_lower
    }

    pub fn element_levels(&self, mesh: &Mesh2D, e: usize) -> (Vec<Point>, Vec<Point>) {
        let nodes = &mesh.elements[e].nodes;
        (
            nodes.iter().map(|&n| self.lower_coords[n]).collect(),
            nodes.iter().map(|&n| self.upper_coords[n]).collect(),
        )
    }

    /// Number of space-time nodes of element `e` (both levels).
    pub fn spacetime_node_count(&self, mesh: &Mesh2D, e: usize) -> usize {
        2 * mesh.elements[e].nodes.len()
    }

    /// Space-time volume of element `e` by quadrature.
    pub fn element_volume(&self, mesh: &Mesh2D, e: usize) -> f64 {
        let shape = mesh.elements[e].shape;
        let (lo, up) = self.element_levels(mesh, e);
        spacetime_quadrature(shape)
            .points
            .iter()
            .map(|q| q.weight * st_jacobian(shape, &lo, &up, self.dt(), q.xi, q.theta).det)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementValidity {
    Valid,
    /// Jacobian determinant vanishes at some quadrature point.
    Collapsing,
    /// Jacobian determinant changes sign (or is negative throughout).
    Twisted,
}

pub fn check_element_validity(slab: &SpaceTimeSlab, mesh: &Mesh2D, e: usize) -> ElementValidity {
    let el = &mesh.elements[e];
    let (lo, up) = slab.element_levels(mesh, e);
    let dt = slab.dt();
    let n = lo.len();
    let mut edge_sq = 0.0;
    for level in [&lo, &up] {
        for k in 0..n {
            let l = norm(sub(level[(k + 1) % n], level[k]));
            edge_sq += l * l;
        }
    }
    let tol = 1e-12 * edge_sq / (2 * n) as f64 * dt;

    let (mut pos, mut neg, mut small) = (false, false, false);
    for q in spacetime_quadrature(el.shape).points {
        let det = st_jacobian(el.shape, &lo, &up, dt, q.xi, q.theta).det;
        if det.abs() < tol {
            small = true;
        } else if det > 0.0 {
            pos = true;
        } else {
            neg = true;
        }
    }
    if neg {
        ElementValidity::Twisted
    } else if small || !pos {
        ElementValidity::Collapsing
    } else {
        ElementValidity::Valid
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Element;

    fn single(shape: Shape, pts: Vec<Point>) -> Mesh2D {
        let nodes = (0..pts.len()).collect();
        Mesh2D {
            node_coords: pts,
            elements: vec![Element::new(shape, nodes, 0)],
            boundary_faces: vec![],
        }
    }

    fn unit_quad() -> Mesh2D {
        single(
            Shape::Quad4,
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        )
    }

    #[test]
    fn undeformed_quad_prism_volume() {
        let m = unit_quad();
        let s = extrude_slab(&m, m.node_coords.clone(), m.node_coords.clone(), 0.0, 0.1).unwrap();
        assert_eq!(s.spacetime_node_count(&m, 0), 8);
        assert!((s.element_volume(&m, 0) - 0.1).abs() < 1e-15);
        assert_eq!(check_element_validity(&s, &m, 0), ElementValidity::Valid);
    }

    #[test]
    fn triangle_prism_volume() {
        let m = single(Shape::Tri3, vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let s = extrude_slab(&m, m.node_coords.clone(), m.node_coords.clone(), 0.3, 0.5).unwrap();
        assert_eq!(s.spacetime_node_count(&m, 0), 6);
        assert!((s.element_volume(&m, 0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn constant_integrates_exactly_on_unit_extrusion() {
        let m = unit_quad();
        let s = extrude_slab(&m, m.node_coords.clone(), m.node_coords.clone(), 0.0, 1.0).unwrap();
        assert!((s.element_volume(&m, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_lengths_and_empty_interval_are_rejected() {
        let m = unit_quad();
        assert!(extrude_slab(&m, vec![[0.0; 2]; 3], m.node_coords.clone(), 0.0, 1.0).is_err());
        assert!(extrude_slab(&m, m.node_coords.clone(), m.node_coords.clone(), 1.0, 1.0).is_err());
    }

    #[test]
    fn upper_level_collapsed_onto_a_line() {
        let m = unit_quad();
        let upper = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 0.0]];
        let s = extrude_slab(&m, upper.clone(), upper, 0.0, 1.0).unwrap();
        assert_eq!(check_element_validity(&s, &m, 0), ElementValidity::Collapsing);
    }

    #[test]
    fn reversed_upper_orientation_is_twisted() {
        // Upper level mirrored about x = 0.5 with unchanged node indices, so the
        // orientation flips over the slab: det J is positive at the lower
        // temporal Gauss points and negative at the upper ones.
        let m = unit_quad();
        let upper = vec![[1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let s = extrude_slab(&m, m.node_coords.clone(), upper, 0.0, 1.0).unwrap();
        let dets: Vec<f64> = spacetime_quadrature(Shape::Quad4)
            .points
            .iter()
            .map(|q| {
                let (lo, up) = s.element_levels(&m, 0);
                st_jacobian(Shape::Quad4, &lo, &up, 1.0, q.xi, q.theta).det
            })
            .collect();
        // Oracle: x(theta) = (1 - t_u) x_ref + t_u (1 - x_ref) => dx/dxi scales by 1 - 2 t_u.
        for (q, d) in spacetime_quadrature(Shape::Quad4).points.iter().zip(&dets) {
            let tu = 0.5 * (1.0 + q.theta);
            let expected = (1.0 - 2.0 * tu) * 0.25 * 0.5;
            assert!((d - expected).abs() < 1e-14);
        }
        assert_eq!(check_element_validity(&s, &m, 0), ElementValidity::Twisted);
    }
}
