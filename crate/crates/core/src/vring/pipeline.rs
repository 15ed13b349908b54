use std::collections::BTreeSet;

use super::{ActivityState, RingTopology, GAMMA_IN, GAMMA_OUT};
use crate::geom::{polygon_area, Point};
use crate::mesh::{BoundaryFace, Mesh2D, SpaceTimeSlab};
use crate::{Error, Result};

/// Shear step: moves the upper level of every ring node by the distance travelled
/// over the slab (midpoint rule on `velocity`). Static nodes keep their upper level.
pub fn advance_motion(
    slab: &SpaceTimeSlab,
    ring: &RingTopology,
    velocity: impl Fn(f64) -> f64,
) -> SpaceTimeSlab {
    let dt = slab.t_upper - slab.t_lower;
    let d = velocity(0.5 * (slab.t_lower + slab.t_upper)) * dt;
    let upper = slab
        .lower_coords
        .iter()
        .zip(&slab.upper_coords)
        .zip(&ring.moving)
        .map(|((&lo, &up), &m)| {
            if m {
                [lo[0] + d * ring.direction[0], lo[1] + d * ring.direction[1]]
            } else {
                up
            }
        })
        .collect();
    SpaceTimeSlab {
        lower_coords: slab.lower_coords.clone(),
        upper_coords: upper,
        t_lower: slab.t_lower,
        t_upper: slab.t_upper,
    }
}

/// True when a moving interface node has passed `x_crit`.
pub fn needs_connectivity_update(ring: &RingTopology, upper_coords: &[Point]) -> bool {
    ring.gamma_m_nodes
        .iter()
        .flatten()
        .any(|&n| ring.beyond(ring.project(upper_coords[n]), ring.x_crit))
}

/// Slip step: recreates the update-layer connectivity through the update map.
/// Node coordinates are not touched.
pub fn slip_step(mesh: &mut Mesh2D, ring: &RingTopology) -> Result<()> {
    for (e, el) in mesh.elements.iter_mut().enumerate().filter(|(_, el)| el.is_update_layer) {
        for n in &mut el.nodes {
            if ring.moving[*n] {
                *n = *ring.update_map.get(n).ok_or_else(|| {
                    Error::Structural(format!(
                        "update layer element {e} references node {n} without an update map entry"
                    ))
                })?;
            }
        }
    }
    Ok(())
}

/// Moves every ring node beyond `x_crit` back by the ring length. The decision is
/// taken on `upper`; `lower`, when given, is moved alongside.
pub fn shift_nodes(ring: &RingTopology, upper: &mut [Point], mut lower: Option<&mut [Point]>) -> Vec<bool> {
    let (dx, dy) = (ring.ring_length * ring.direction[0], ring.ring_length * ring.direction[1]);
    let mut flags = vec![false; upper.len()];
    for (i, p) in upper.iter_mut().enumerate() {
        if ring.moving[i] && ring.beyond(ring.project(*p), ring.x_crit) {
            p[0] -= dx;
            p[1] -= dy;
            if let Some(lo) = lower.as_deref_mut() {
                lo[i][0] -= dx;
                lo[i][1] -= dy;
            }
            flags[i] = true;
        }
    }
    flags
}

/// Start-time placement: ring nodes beyond `x_out` move upstream by the ring
/// length, so the ring's downstream end sits on the outflow trace.
pub fn place_ring(ring: &RingTopology, coords: &mut [Point]) {
    for (i, p) in coords.iter_mut().enumerate() {
        if ring.moving[i] && ring.beyond(ring.project(*p), ring.x_out) {
            p[0] -= ring.ring_length * ring.direction[0];
            p[1] -= ring.ring_length * ring.direction[1];
        }
    }
}

/// Recomputes node and element activity from the shifted upper coordinates.
///
/// Ring nodes are provisionally active inside `(x_in + delta, x_crit]`. An element
/// is active when it has a provisionally active node, no node shifted this step,
/// and it does not span the ring seam. Final node activity is the union of the
/// nodes of active elements. Without `prev` the history equals the new state.
pub fn update_activity(
    mesh: &Mesh2D,
    ring: &RingTopology,
    upper_coords: &[Point],
    node_shifted: &[bool],
    prev: Option<&ActivityState>,
) -> ActivityState {
    let provisional: Vec<bool> = (0..mesh.node_count())
        .map(|i| !ring.moving[i] || ring.in_activation_zone(ring.project(upper_coords[i])))
        .collect();
    let elem_active: Vec<bool> = mesh
        .elements
        .iter()
        .map(|el| {
            if !el.is_moving() {
                return true;
            }
            el.nodes.iter().any(|&n| provisional[n])
                && !el.nodes.iter().any(|&n| node_shifted[n])
                && !ring.is_torn(el.nodes.iter().map(|&n| upper_coords[n]))
        })
        .collect();
    let mut node_active = vec![false; mesh.node_count()];
    for (el, _) in mesh.elements.iter().zip(&elem_active).filter(|(_, &a)| a) {
        for &n in &el.nodes {
            node_active[n] = true;
        }
    }
    let (elem_active_prev, node_active_prev) = match prev {
        Some(p) => (p.elem_active.clone(), p.node_active.clone()),
        None => (elem_active.clone(), node_active.clone()),
    };
    ActivityState {
        node_active,
        elem_active,
        elem_active_prev,
        node_active_prev,
        node_shifted: node_shifted.to_vec(),
    }
}

/// Current boundary faces: the mesh's own faces on active elements plus lateral
/// faces between active and inactive ring elements, tagged [`GAMMA_IN`] when
/// they lie upstream of the window centre and [`GAMMA_OUT`] otherwise.
pub fn update_lateral_boundaries(
    mesh: &Mesh2D,
    ring: &RingTopology,
    activity: &ActivityState,
    coords: &[Point],
) -> Result<Vec<BoundaryFace>> {
    if !mesh
        .elements
        .iter()
        .zip(&activity.elem_active)
        .any(|(el, &a)| a && el.is_moving())
    {
        return Err(Error::DomainVanished);
    }
    let mut faces: Vec<BoundaryFace> = mesh
        .boundary_faces
        .iter()
        .filter(|f| activity.elem_active[f.element])
        .cloned()
        .collect();
    let centre = 0.5 * (ring.x_in + ring.x_out);
    let neighbors = mesh.edge_neighbors();
    for (e, el) in mesh.elements.iter().enumerate() {
        if !el.is_moving() || !activity.elem_active[e] {
            continue;
        }
        for (k, nb) in neighbors[e].iter().enumerate() {
            let Some(o) = *nb else { continue };
            if activity.elem_active[o] || !mesh.elements[o].is_moving() {
                continue;
            }
            let (a, b) = el.edge(k);
            let mid = 0.5 * (ring.project(coords[a]) + ring.project(coords[b]));
            let marker = if mid < centre { GAMMA_IN } else { GAMMA_OUT };
            faces.push(BoundaryFace::new(e, k, marker));
        }
    }
    Ok(faces)
}

/// Boundary conformity for structured rings: nodes on the current lateral faces
/// get their coordinate along the motion set to `x_in` or `x_out`. Returns the
/// input unchanged for unstructured rings.
pub fn conform_structured_boundary(
    mesh: &Mesh2D,
    ring: &RingTopology,
    faces: &[BoundaryFace],
    coords: &[Point],
) -> Vec<Point> {
    let mut out = coords.to_vec();
    if !ring.structured {
        return out;
    }
    let mut targets: BTreeSet<(usize, u8)> = BTreeSet::new();
    for f in faces {
        let side = match f.marker.as_str() {
            GAMMA_IN => 0,
            GAMMA_OUT => 1,
            _ => continue,
        };
        let (a, b) = mesh.elements[f.element].edge(f.edge);
        targets.insert((a, side));
        targets.insert((b, side));
    }
    for (n, side) in targets {
        let x = if side == 0 { ring.x_in } else { ring.x_out };
        let s = ring.project(out[n]);
        out[n][0] += (x - s) * ring.direction[0];
        out[n][1] += (x - s) * ring.direction[1];
    }
    out
}

/// Total area of active elements, excluding the ones flagged in `skip`.
pub fn active_area(mesh: &Mesh2D, activity: &ActivityState, coords: &[Point], skip: &[bool]) -> f64 {
    mesh.elements
        .iter()
        .enumerate()
        .filter(|&(e, _)| activity.elem_active[e] && !skip.get(e).copied().unwrap_or(false))
        .map(|(_, el)| polygon_area(&el.nodes.iter().map(|&n| coords[n]).collect::<Vec<_>>()))
        .sum()
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::mesh::{Element, Shape};

    fn ring_1d(moving: Vec<bool>) -> RingTopology {
        RingTopology {
            n_blocks: 1,
            nodes_per_block: 0,
            block_length: 1.0,
            ring_length: 2.0,
            direction: [1.0, 0.0],
            x_in: 0.0,
            x_out: 1.0,
            delta: 0.02,
            x_crit: 1.02,
            update_map: BTreeMap::new(),
            gamma_m_nodes: vec![],
            gamma_s_nodes: vec![],
            structured: true,
            moving,
        }
    }

    /// Strip of quads along x with nodes at the given abscissae, y in {0, 1}.
    fn strip(xs: &[f64]) -> Mesh2D {
        let n = xs.len();
        let mut m = Mesh2D::default();
        for &x in xs {
            m.node_coords.push([x, 0.0]);
        }
        for &x in xs {
            m.node_coords.push([x, 1.0]);
        }
        for i in 0..n - 1 {
            m.elements.push(Element::new(Shape::Quad4, vec![i, i + 1, n + i + 1, n + i], 1));
        }
        m
    }

    #[test]
    fn motion_moves_only_ring_nodes() {
        let ring = ring_1d(vec![true, false]);
        let slab = SpaceTimeSlab {
            lower_coords: vec![[0.5, 0.0], [0.5, -1.0]],
            upper_coords: vec![[0.5, 0.0], [0.5, -1.0]],
            t_lower: 0.0,
            t_upper: 0.2,
        };
        let moved = advance_motion(&slab, &ring, |_| 0.02);
        assert!((moved.upper_coords[0][0] - 0.504).abs() < 1e-15);
        assert_eq!(moved.upper_coords[1], [0.5, -1.0]);
        assert_eq!(moved.lower_coords, slab.lower_coords);
        let still = advance_motion(&slab, &ring, |_| 0.0);
        assert_eq!(still.upper_coords, still.lower_coords);
    }

    #[test]
    fn criterion_is_a_strict_exceedance() {
        let mut ring = ring_1d(vec![true, true]);
        ring.gamma_m_nodes = vec![vec![0, 1]];
        assert!(!needs_connectivity_update(&ring, &[[0.3, 0.0], [1.02, 0.0]]));
        assert!(needs_connectivity_update(&ring, &[[0.3, 0.0], [1.02 + 1e-6, 0.0]]));
    }

    #[test]
    fn shift_moves_both_levels_by_the_ring_length() {
        let ring = ring_1d(vec![true, true, false]);
        let mut up = vec![[1.021, 0.0], [1.02, 0.0], [5.0, 0.0]];
        let mut lo = vec![[1.017, 0.0], [1.016, 0.0], [5.0, 0.0]];
        let flags = shift_nodes(&ring, &mut up, Some(&mut lo));
        assert_eq!(flags, vec![true, false, false]);
        assert!((up[0][0] + 0.979).abs() < 1e-15);
        assert!((lo[0][0] + 0.983).abs() < 1e-15);
        assert_eq!(up[1][0], 1.02);
        assert_eq!(up[2][0], 5.0);
    }

    #[test]
    fn repeated_ring_shifts_return_a_node_home() {
        let ring = ring_1d(vec![true]);
        let start = 0.37;
        let mut p = [[start, 0.0]];
        let step = 0.004;
        let n = (ring.ring_length / step).round() as usize;
        let mut shifts = 0;
        for _ in 0..n {
            p[0][0] += step;
            shifts += shift_nodes(&ring, &mut p, None)[0] as usize;
        }
        assert_eq!(shifts, 1);
        assert!((p[0][0] - start).abs() < 1e-12);
    }

    #[test]
    fn exactly_one_copy_of_a_duplicated_pair_is_active() {
        // Element {0.99, 1.01} and its copy one block upstream {-0.01, 0.01}.
        let mut m = strip(&[0.99, 1.01]);
        let n0 = m.node_count();
        for x in [-0.01, 0.01] {
            m.node_coords.push([x, 0.0]);
        }
        for x in [-0.01, 0.01] {
            m.node_coords.push([x, 1.0]);
        }
        m.elements.push(Element::new(Shape::Quad4, vec![n0, n0 + 1, n0 + 3, n0 + 2], 2));
        let ring = ring_1d(vec![true; m.node_count()]);
        let act = update_activity(&m, &ring, &m.node_coords, &vec![false; m.node_count()], None);
        assert_eq!(act.elem_active, vec![true, false]);
    }

    #[test]
    fn element_across_the_inflow_is_active_and_reactivates_its_upstream_nodes() {
        let m = strip(&[-0.01, 0.03]);
        let ring = ring_1d(vec![true; 4]);
        let act = update_activity(&m, &ring, &m.node_coords, &[false; 4], None);
        assert!(act.elem_active[0]);
        assert!(act.node_active.iter().all(|&a| a));
        let again = update_activity(&m, &ring, &m.node_coords, &[false; 4], Some(&act));
        assert_eq!(again.node_active, act.node_active);
        assert_eq!(again.elem_active_prev, act.elem_active);
        assert_eq!(again.node_active_prev, act.node_active);
    }

    #[test]
    fn shifted_and_seam_elements_are_inactive() {
        let m = strip(&[0.5, 0.52]);
        let ring = ring_1d(vec![true; 4]);
        let act = update_activity(&m, &ring, &m.node_coords, &[true, false, false, false], None);
        assert!(!act.elem_active[0]);
        let torn = strip(&[1.01, -0.97]);
        let act = update_activity(&torn, &ring, &torn.node_coords, &[false; 4], None);
        assert!(!act.elem_active[0]);
    }

    #[test]
    fn lateral_faces_separate_active_from_inactive_columns() {
        // Columns at x in [-0.02, 0], [0, 0.5], [0.5, 1.0], [1.0, 1.02]; the outer two
        // are inactive.
        let m = strip(&[-0.02, 0.0, 0.5, 1.0, 1.02]);
        let ring = ring_1d(vec![true; m.node_count()]);
        let mut act = update_activity(&m, &ring, &m.node_coords, &vec![false; m.node_count()], None);
        act.elem_active = vec![false, true, true, false];
        let faces = update_lateral_boundaries(&m, &ring, &act, &m.node_coords).unwrap();
        assert_eq!(faces, vec![BoundaryFace::new(1, 3, GAMMA_IN), BoundaryFace::new(2, 1, GAMMA_OUT)]);

        act.elem_active = vec![false; 4];
        assert!(matches!(
            update_lateral_boundaries(&m, &ring, &act, &m.node_coords),
            Err(Error::DomainVanished)
        ));
    }

    #[test]
    fn snapping_moves_lateral_nodes_onto_the_window() {
        let m = strip(&[0.004, 0.5, 1.004]);
        let mut ring = ring_1d(vec![true; 6]);
        let faces = vec![BoundaryFace::new(0, 3, GAMMA_IN), BoundaryFace::new(1, 1, GAMMA_OUT)];
        let snapped = conform_structured_boundary(&m, &ring, &faces, &m.node_coords);
        assert_eq!(snapped[0], [0.0, 0.0]);
        assert_eq!(snapped[3], [0.0, 1.0]);
        assert_eq!(snapped[2], [1.0, 0.0]);
        assert_eq!(snapped[1], m.node_coords[1]);

        ring.structured = false;
        assert_eq!(conform_structured_boundary(&m, &ring, &faces, &m.node_coords), m.node_coords);
    }

    #[test]
    fn slip_rewires_the_layer_and_keeps_coordinates() {
        // Layer element (s1, s2, m3, m2) with update map m2 -> m1, m3 -> m2.
        let coords: Vec<Point> = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 1.0]];
        let (s1, s2, m1, m2, m3) = (0, 1, 2, 3, 4);
        let mut mesh = Mesh2D {
            node_coords: coords.clone(),
            elements: vec![Element {
                shape: Shape::Quad4,
                nodes: vec![s1, s2, m3, m2],
                block_id: 0,
                is_update_layer: true,
            }],
            boundary_faces: vec![],
        };
        let mut ring = ring_1d(vec![false, false, true, true, true]);
        ring.update_map = BTreeMap::from([(m1, m3), (m2, m1), (m3, m2)]);
        slip_step(&mut mesh, &ring).unwrap();
        assert_eq!(mesh.elements[0].nodes, vec![s1, s2, m2, m1]);
        assert_eq!(mesh.node_coords, coords);

        let before = mesh.clone();
        ring.update_map = (2..5).map(|n| (n, n)).collect();
        slip_step(&mut mesh, &ring).unwrap();
        assert_eq!(mesh, before);

        ring.update_map.remove(&m2);
        assert!(matches!(slip_step(&mut mesh, &ring), Err(Error::Structural(_))));
    }
}
