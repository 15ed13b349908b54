use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{RingTopology, GAMMA_IN, GAMMA_OUT};
use crate::geom::{dot, norm, polygon_area, transverse, Point};
use crate::mesh::{BoundaryFace, Element, Mesh2D, Shape, STATIC_BLOCK};
use crate::{Error, Result};

/// One update layer: the face markers of its moving-side and static-side interfaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerPair {
    pub gamma_m: String,
    pub gamma_s: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub layers: Vec<LayerPair>,
    pub direction: Point,
    /// Margin beyond `x_out`; defaults to the minimal moving element extent.
    pub delta: Option<f64>,
    pub structured: bool,
}

/// Assembles the static mesh, `n_blocks` copies of the characteristic block and
/// one virtual copy into a closed ring joined to the static part by update layers.
///
/// The block mesh marks its upstream and downstream traces with [`GAMMA_IN`] and
/// [`GAMMA_OUT`] and its moving-side interfaces with the `gamma_m` markers of the
/// spec. The static mesh carries the `gamma_s` markers. Node coordinates are left
/// as built, with the ring laid out over `[x_in, x_in + ring_length)`.
pub fn build_ring(
    static_mesh: &Mesh2D,
    block_mesh: &Mesh2D,
    n_blocks: usize,
    spec: &LayerSpec,
) -> Result<(Mesh2D, RingTopology)> {
    if n_blocks == 0 {
        return Err(Error::Config("n_blocks must be at least 1".into()));
    }
    let dir = spec.direction;
    if (norm(dir) - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!("direction {dir:?} is not a unit vector")));
    }
    if spec.layers.is_empty() {
        return Err(Error::Config("at least one update layer is required".into()));
    }
    let nb = block_mesh.node_count();

    let trace_in = sorted_trace(block_mesh, GAMMA_IN, dir);
    let trace_out = sorted_trace(block_mesh, GAMMA_OUT, dir);
    let block_length = block_length_from_traces(block_mesh, &trace_in, &trace_out, dir)?;

    let mut mesh = Mesh2D {
        node_coords: static_mesh.node_coords.clone(),
        elements: static_mesh.elements.clone(),
        boundary_faces: Vec::new(),
    };
    let gamma_s_markers: BTreeSet<&str> =
        spec.layers.iter().map(|l| l.gamma_s.as_str()).collect();
    let gamma_m_markers: BTreeSet<&str> =
        spec.layers.iter().map(|l| l.gamma_m.as_str()).collect();
    mesh.boundary_faces.extend(
        static_mesh
            .boundary_faces
            .iter()
            .filter(|f| !gamma_s_markers.contains(f.marker.as_str()))
            .cloned(),
    );

    // Copy k occupies [x0 + k L, x0 + (k+1) L); its upstream trace is the
    // previous copy's downstream trace.
    let mut maps: Vec<Vec<usize>> = Vec::with_capacity(n_blocks + 1);
    for k in 0..=n_blocks {
        let mut map = vec![usize::MAX; nb];
        if k > 0 {
            let prev = &maps[k - 1];
            for (&a, &b) in trace_in.iter().zip(&trace_out) {
                map[a] = prev[b];
            }
        }
        let off = k as f64 * block_length;
        for (i, slot) in map.iter_mut().enumerate() {
            if *slot == usize::MAX {
                let p = block_mesh.node_coords[i];
                *slot = mesh.node_coords.len();
                mesh.node_coords.push([p[0] + off * dir[0], p[1] + off * dir[1]]);
            }
        }
        let e0 = mesh.elements.len();
        for el in &block_mesh.elements {
            mesh.elements.push(Element {
                shape: el.shape,
                nodes: el.nodes.iter().map(|&n| map[n]).collect(),
                block_id: k as i32 + 1,
                is_update_layer: false,
            });
        }
        for f in &block_mesh.boundary_faces {
            let m = f.marker.as_str();
            if m == GAMMA_IN || m == GAMMA_OUT || gamma_m_markers.contains(m) {
                continue;
            }
            mesh.boundary_faces.push(BoundaryFace::new(e0 + f.element, f.edge, m));
        }
        maps.push(map);
    }

    let x_in = dot(block_mesh.node_coords[trace_in[0]], dir);
    let ring_length = (n_blocks + 1) as f64 * block_length;

    // Ring order of every moving interface, taken before closure while the
    // coordinates still run monotonically around the ring.
    let mut gamma_m_nodes = Vec::with_capacity(spec.layers.len());
    for layer in &spec.layers {
        let local = face_nodes(block_mesh, &layer.gamma_m);
        if local.is_empty() {
            return Err(Error::Structural(format!(
                "block mesh has no faces marked {}",
                layer.gamma_m
            )));
        }
        let mut ring: Vec<usize> = maps
            .iter()
            .flat_map(|map| local.iter().map(move |&n| map[n]))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        ring.sort_by(|&a, &b| {
            dot(mesh.node_coords[a], dir).total_cmp(&dot(mesh.node_coords[b], dir))
        });
        gamma_m_nodes.push(ring);
    }

    let last = &maps[n_blocks];
    let virt: Vec<usize> = trace_out.iter().map(|&n| last[n]).collect();
    let first: Vec<usize> = trace_in.iter().map(|&n| maps[0][n]).collect();
    close_ring(&mut mesh, &virt, &first, dir)?;
    let virt_to_in: HashMap<usize, usize> = virt.iter().copied().zip(first.iter().copied()).collect();
    for ring in &mut gamma_m_nodes {
        ring.retain(|n| !virt_to_in.contains_key(n));
    }

    let mut update_map = BTreeMap::new();
    let mut gamma_s_nodes = Vec::with_capacity(spec.layers.len());
    for (layer, ring) in spec.layers.iter().zip(&gamma_m_nodes) {
        let mut gs = face_nodes(static_mesh, &layer.gamma_s);
        if gs.is_empty() {
            return Err(Error::Structural(format!(
                "static mesh has no faces marked {}",
                layer.gamma_s
            )));
        }
        gs.sort_by(|&a, &b| dot(mesh.node_coords[a], dir).total_cmp(&dot(mesh.node_coords[b], dir)));
        let (elems, map) = build_update_layer(&mesh.node_coords, ring, &gs, dir)?;
        let e0 = mesh.elements.len();
        let n_layer = elems.len();
        mesh.elements.extend(elems);
        for (e, s, marker) in [(e0, gs[0], GAMMA_IN), (e0 + n_layer - 1, gs[gs.len() - 1], GAMMA_OUT)] {
            let el = &mesh.elements[e];
            // The lateral edge joins the end node of the static side to the moving
            // node straight across from it.
            let ps = dot(mesh.node_coords[s], dir);
            let edge = (0..el.edge_count())
                .filter_map(|k| {
                    let (a, b) = el.edge(k);
                    let other = if a == s { b } else if b == s { a } else { return None };
                    ring.contains(&other)
                        .then(|| (k, (dot(mesh.node_coords[other], dir) - ps).abs()))
                })
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .map(|(k, _)| k)
                .ok_or_else(|| Error::Structural("update layer end has no lateral edge".into()))?;
            mesh.boundary_faces.push(BoundaryFace::new(e, edge, marker));
        }
        update_map.extend(map);
        gamma_s_nodes.push(gs);
    }

    // Drop the orphaned virtual trace.
    let mut used = vec![false; mesh.node_count()];
    for el in &mesh.elements {
        for &n in &el.nodes {
            used[n] = true;
        }
    }
    let (remap, kept) = compact_nodes(&used);
    mesh.node_coords = kept.iter().map(|&o| mesh.node_coords[o]).collect();
    for el in &mut mesh.elements {
        for n in &mut el.nodes {
            *n = remap[*n];
        }
    }
    for list in gamma_m_nodes.iter_mut().chain(gamma_s_nodes.iter_mut()) {
        for n in list.iter_mut() {
            *n = remap[*n];
        }
    }
    let update_map: BTreeMap<usize, usize> =
        update_map.into_iter().map(|(a, b)| (remap[a], remap[b])).collect();

    let moving = mesh.moving_node_flags();
    let mut ring = RingTopology {
        n_blocks,
        nodes_per_block: moving.iter().filter(|&&m| m).count() / (n_blocks + 1),
        block_length,
        ring_length,
        direction: dir,
        x_in,
        x_out: x_in + n_blocks as f64 * block_length,
        delta: 0.0,
        x_crit: 0.0,
        update_map,
        gamma_m_nodes,
        gamma_s_nodes,
        structured: spec.structured,
        moving,
    };
    let min_extent = ring.min_moving_extent(&mesh)?;
    let delta = spec.delta.unwrap_or(min_extent);
    ring.set_delta(delta, min_extent)?;
    ring.validate_mesh(&mesh)?;
    Ok((mesh, ring))
}

/// Replaces every reference to a `gamma_virt` node by the matching `gamma_in`
/// node. Idempotent: a second call finds nothing to replace.
pub fn close_ring(
    mesh: &mut Mesh2D,
    gamma_virt: &[usize],
    gamma_in: &[usize],
    direction: Point,
) -> Result<()> {
    if gamma_virt.len() != gamma_in.len() {
        return Err(Error::Structural(format!(
            "ring closure needs equal traces, got {} virtual and {} inflow nodes",
            gamma_virt.len(),
            gamma_in.len()
        )));
    }
    let scale = trace_scale(mesh, gamma_in.iter().chain(gamma_virt));
    for (&v, &i) in gamma_virt.iter().zip(gamma_in) {
        let tv = transverse(mesh.node_coords[v], direction);
        let ti = transverse(mesh.node_coords[i], direction);
        if (tv - ti).abs() > 1e-9 * scale {
            return Err(Error::Structural(format!(
                "virtual node {v} and inflow node {i} differ transversally ({tv} vs {ti})"
            )));
        }
    }
    let map: HashMap<usize, usize> = gamma_virt.iter().copied().zip(gamma_in.iter().copied()).collect();
    for el in &mut mesh.elements {
        for n in &mut el.nodes {
            if let Some(&r) = map.get(n) {
                *n = r;
            }
        }
    }
    Ok(())
}

/// Builds the elements joining a moving interface to a static one by a monotone
/// sweep along `direction`, plus the slip map of the moving interface.
///
/// `gamma_m` lists the moving interface in ring order; the layer uses the part of
/// it spanning the static interface `gamma_s`. Equal node counts give quads, a
/// finer moving side gives triangles. The slip map sends every moving node to its
/// upstream neighbour on the ring.
pub fn build_update_layer(
    coords: &[Point],
    gamma_m: &[usize],
    gamma_s: &[usize],
    direction: Point,
) -> Result<(Vec<Element>, BTreeMap<usize, usize>)> {
    let proj = |n: usize| dot(coords[n], direction);
    if gamma_s.len() < 2 || gamma_m.len() < 2 {
        return Err(Error::Structural("update layer interfaces need at least two nodes".into()));
    }
    let scale = trace_scale_pts(gamma_m.iter().chain(gamma_s).map(|&n| coords[n]));
    let tol = 1e-9 * scale;
    for list in [gamma_m, gamma_s] {
        if list.windows(2).any(|w| proj(w[1]) <= proj(w[0]) + tol) {
            return Err(Error::Structural("interface nodes are not monotone along the motion".into()));
        }
    }
    let (s_lo, s_hi) = (proj(gamma_s[0]), proj(gamma_s[gamma_s.len() - 1]));
    let j0 = gamma_m
        .iter()
        .position(|&m| (proj(m) - s_lo).abs() <= tol)
        .ok_or_else(|| Error::Structural("moving interface has no node at the layer start".into()))?;
    let j1 = gamma_m
        .iter()
        .position(|&m| (proj(m) - s_hi).abs() <= tol)
        .ok_or_else(|| Error::Structural("moving interface has no node at the layer end".into()))?;
    let m = &gamma_m[j0..=j1];
    if m.len() < gamma_s.len() {
        return Err(Error::Constraint(format!(
            "moving interface has {} edges where the static one has {}",
            m.len() - 1,
            gamma_s.len() - 1
        )));
    }
    let gap = m.iter().map(|&n| transverse(coords[n], direction)).sum::<f64>() / m.len() as f64
        - gamma_s.iter().map(|&n| transverse(coords[n], direction)).sum::<f64>() / gamma_s.len() as f64;
    if gap.abs() <= tol {
        return Err(Error::Structural("update layer has zero width".into()));
    }

    let mut elems = Vec::new();
    let oriented = |shape: Shape, mut nodes: Vec<usize>| {
        let pts: Vec<Point> = nodes.iter().map(|&n| coords[n]).collect();
        if polygon_area(&pts) < 0.0 {
            nodes.reverse();
        }
        Element {
            shape,
            nodes,
            block_id: STATIC_BLOCK,
            is_update_layer: true,
        }
    };
    if m.len() == gamma_s.len() {
        for i in 0..m.len() - 1 {
            elems.push(oriented(Shape::Quad4, vec![gamma_s[i], gamma_s[i + 1], m[i + 1], m[i]]));
        }
    } else {
        let (mut i, mut j) = (0, 0);
        while i + 1 < gamma_s.len() || j + 1 < m.len() {
            let advance_s = if i + 1 == gamma_s.len() {
                false
            } else if j + 1 == m.len() {
                true
            } else {
                proj(gamma_s[i + 1]) < proj(m[j + 1]) - tol
            };
            if advance_s {
                elems.push(oriented(Shape::Tri3, vec![gamma_s[i], gamma_s[i + 1], m[j]]));
                i += 1;
            } else {
                elems.push(oriented(Shape::Tri3, vec![gamma_s[i], m[j + 1], m[j]]));
                j += 1;
            }
        }
    }
    for (k, el) in elems.iter().enumerate() {
        let pts: Vec<Point> = el.nodes.iter().map(|&n| coords[n]).collect();
        if !(polygon_area(&pts).abs() > tol * tol) {
            return Err(Error::Structural(format!("update layer element {k} is degenerate")));
        }
    }

    let n = gamma_m.len();
    let map = (0..n).map(|j| (gamma_m[j], gamma_m[(j + n - 1) % n])).collect();
    Ok((elems, map))
}

impl RingTopology {
    /// Smallest extent along the motion of any moving element, seam elements unwrapped.
    pub fn min_moving_extent(&self, mesh: &Mesh2D) -> Result<f64> {
        mesh.elements
            .iter()
            .filter(|e| e.is_moving())
            .map(|el| {
                let pts: Vec<Point> = el.nodes.iter().map(|&n| mesh.node_coords[n]).collect();
                let (lo, hi) = self.unwrap_points(&pts).iter().fold((f64::MAX, f64::MIN), |(lo, hi), &p| {
                    let s = self.project(p);
                    (lo.min(s), hi.max(s))
                });
                hi - lo
            })
            .reduce(f64::min)
            .ok_or_else(|| Error::Structural("ring has no moving elements".into()))
    }

    /// Sets `delta` and `x_crit`, enforcing `0 < delta <= min_extent`.
    pub fn set_delta(&mut self, delta: f64, min_extent: f64) -> Result<()> {
        if !(delta > 0.0) || delta > min_extent * (1.0 + 1e-9) {
            return Err(Error::Constraint(format!(
                "delta = {delta} must lie in (0, {min_extent}], the minimal element extent along the motion"
            )));
        }
        self.delta = delta;
        self.x_crit = self.x_out + delta;
        Ok(())
    }

    /// Mesh invariants for a ring mesh: element areas are measured with seam
    /// elements unwrapped, since their physical coordinates span the ring.
    pub fn validate_mesh(&self, mesh: &Mesh2D) -> Result<()> {
        mesh.validate_topology()?;
        if self.moving.len() != mesh.node_count() {
            return Err(Error::Structural(format!(
                "ring flags cover {} nodes but the mesh has {}",
                self.moving.len(),
                mesh.node_count()
            )));
        }
        for (i, el) in mesh.elements.iter().enumerate() {
            let pts: Vec<Point> = el.nodes.iter().map(|&n| mesh.node_coords[n]).collect();
            let pts = if el.is_moving() { self.unwrap_points(&pts) } else { pts };
            let area = polygon_area(&pts);
            if !(area > 0.0) {
                return Err(Error::Structural(format!(
                    "element {i} has non-positive area {area:e}"
                )));
            }
        }
        let n = mesh.node_count();
        for (&a, &b) in &self.update_map {
            if a >= n || b >= n {
                return Err(Error::Structural(format!("update map entry {a} -> {b} is out of range")));
            }
        }
        Ok(())
    }
}

fn face_nodes(mesh: &Mesh2D, marker: &str) -> Vec<usize> {
    let mut set = BTreeSet::new();
    for f in mesh.boundary_faces.iter().filter(|f| f.marker == marker) {
        let (a, b) = mesh.elements[f.element].edge(f.edge);
        set.insert(a);
        set.insert(b);
    }
    set.into_iter().collect()
}

fn sorted_trace(mesh: &Mesh2D, marker: &str, dir: Point) -> Vec<usize> {
    let mut nodes = face_nodes(mesh, marker);
    nodes.sort_by(|&a, &b| {
        transverse(mesh.node_coords[a], dir).total_cmp(&transverse(mesh.node_coords[b], dir))
    });
    nodes
}

fn block_length_from_traces(mesh: &Mesh2D, tin: &[usize], tout: &[usize], dir: Point) -> Result<f64> {
    if tin.is_empty() || tin.len() != tout.len() {
        return Err(Error::Structural(format!(
            "block traces do not match: {} upstream and {} downstream nodes",
            tin.len(),
            tout.len()
        )));
    }
    let scale = trace_scale(mesh, tin.iter().chain(tout));
    let tol = 1e-9 * scale;
    let length = dot(mesh.node_coords[tout[0]], dir) - dot(mesh.node_coords[tin[0]], dir);
    if !(length > tol) {
        return Err(Error::Structural(format!("block length {length} is not positive")));
    }
    for (&a, &b) in tin.iter().zip(tout) {
        let (pa, pb) = (mesh.node_coords[a], mesh.node_coords[b]);
        if (transverse(pa, dir) - transverse(pb, dir)).abs() > tol
            || (dot(pb, dir) - dot(pa, dir) - length).abs() > tol
        {
            return Err(Error::Structural(format!(
                "block traces are not translates: nodes {a} and {b}"
            )));
        }
    }
    Ok(length)
}

fn trace_scale<'a>(mesh: &Mesh2D, nodes: impl Iterator<Item = &'a usize>) -> f64 {
    trace_scale_pts(nodes.map(|&n| mesh.node_coords[n]))
}

fn trace_scale_pts(pts: impl Iterator<Item = Point>) -> f64 {
    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-300)
}

fn compact_nodes(used: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let mut remap = vec![usize::MAX; used.len()];
    let mut kept = Vec::new();
    for (i, &u) in used.iter().enumerate() {
        if u {
            remap[i] = kept.len();
            kept.push(i);
        }
    }
    (remap, kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Structured quad grid of `nx` by `ny` cells over `[x0, x0+lx] x [y0, y0+ly]`.
    fn grid(nx: usize, ny: usize, x0: f64, y0: f64, lx: f64, ly: f64, block: i32) -> Mesh2D {
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut m = Mesh2D::default();
        for j in 0..=ny {
            for i in 0..=nx {
                m.node_coords.push([x0 + lx * i as f64 / nx as f64, y0 + ly * j as f64 / ny as f64]);
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                let e = m.elements.len();
                m.elements.push(Element::new(
                    Shape::Quad4,
                    vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)],
                    block,
                ));
                if j == 0 {
                    m.boundary_faces.push(BoundaryFace::new(e, 0, "bottom"));
                }
                if j + 1 == ny {
                    m.boundary_faces.push(BoundaryFace::new(e, 2, "top"));
                }
                if i == 0 {
                    m.boundary_faces.push(BoundaryFace::new(e, 3, GAMMA_IN));
                }
                if i + 1 == nx {
                    m.boundary_faces.push(BoundaryFace::new(e, 1, GAMMA_OUT));
                }
            }
        }
        m
    }

    fn spec() -> LayerSpec {
        LayerSpec {
            layers: vec![LayerPair {
                gamma_m: "bottom".into(),
                gamma_s: "top".into(),
            }],
            direction: [1.0, 0.0],
            delta: None,
            structured: true,
        }
    }

    #[test]
    fn closing_a_two_block_stack_orphans_the_virtual_trace() {
        // A 2x3 node block (one row of two cells) stacked twice shares one trace.
        let block = grid(2, 1, 0.0, 1.0, 1.0, 0.5, 1);
        let mut stack = block.clone();
        let map: Vec<usize> = (0..6)
            .map(|i| match i {
                0 => 2,
                3 => 5,
                _ => {
                    stack.node_coords.push([block.node_coords[i][0] + 1.0, block.node_coords[i][1]]);
                    stack.node_coords.len() - 1
                }
            })
            .collect();
        for el in &block.elements {
            stack.elements.push(Element::new(Shape::Quad4, el.nodes.iter().map(|&n| map[n]).collect(), 2));
        }
        assert_eq!(stack.node_count(), 2 * 6 - 2);
        let virt = [map[2], map[5]];
        close_ring(&mut stack, &virt, &[0, 3], [1.0, 0.0]).unwrap();
        assert!(stack.elements.iter().all(|e| !e.nodes.contains(&virt[0]) && !e.nodes.contains(&virt[1])));
        let referenced: BTreeSet<usize> = stack.elements.iter().flat_map(|e| e.nodes.clone()).collect();
        assert_eq!(stack.node_count(), 10);
        assert_eq!(referenced.len(), 8);

        let once = stack.clone();
        close_ring(&mut stack, &virt, &[0, 3], [1.0, 0.0]).unwrap();
        assert_eq!(stack, once);
    }

    #[test]
    fn close_ring_rejects_mismatched_traces() {
        let mut m = grid(2, 1, 0.0, 0.0, 1.0, 1.0, 1);
        assert!(matches!(close_ring(&mut m, &[2], &[0, 3], [1.0, 0.0]), Err(Error::Structural(_))));
        assert!(matches!(close_ring(&mut m, &[2, 5], &[3, 0], [1.0, 0.0]), Err(Error::Structural(_))));
    }

    #[test]
    fn matched_interfaces_give_one_quad_per_segment() {
        let coords: Vec<Point> = (0..4)
            .map(|i| [i as f64, 0.0])
            .chain((0..4).map(|i| [i as f64, 1.0]))
            .collect();
        let (elems, map) = build_update_layer(&coords, &[4, 5, 6, 7], &[0, 1, 2, 3], [1.0, 0.0]).unwrap();
        assert_eq!(elems.len(), 3);
        for el in &elems {
            assert_eq!(el.shape, Shape::Quad4);
            assert!(el.is_update_layer);
            let pts: Vec<Point> = el.nodes.iter().map(|&n| coords[n]).collect();
            assert!((polygon_area(&pts) - 1.0).abs() < 1e-14);
        }
        assert_eq!(map[&5], 4);
        assert_eq!(map[&4], 7);
    }

    #[test]
    fn finer_moving_side_is_absorbed_by_triangles() {
        // Static side: 2 edges, moving side: 4 edges.
        let mut coords: Vec<Point> = (0..3).map(|i| [i as f64, 0.0]).collect();
        coords.extend((0..5).map(|i| [0.5 * i as f64, 0.3]));
        let (elems, _) = build_update_layer(&coords, &[3, 4, 5, 6, 7], &[0, 1, 2], [1.0, 0.0]).unwrap();
        assert_eq!(elems.len(), 2 + 4);
        let mut total = 0.0;
        for el in &elems {
            assert_eq!(el.shape, Shape::Tri3);
            let pts: Vec<Point> = el.nodes.iter().map(|&n| coords[n]).collect();
            let a = polygon_area(&pts);
            assert!(a > 0.0);
            total += a;
        }
        assert!((total - 2.0 * 0.3).abs() < 1e-14);
    }

    #[test]
    fn coarser_moving_side_violates_the_edge_count_constraint() {
        let mut coords: Vec<Point> = (0..5).map(|i| [0.5 * i as f64, 0.0]).collect();
        coords.extend((0..3).map(|i| [i as f64, 0.3]));
        let err = build_update_layer(&coords, &[5, 6, 7], &[0, 1, 2, 3, 4], [1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Constraint(_)));
    }

    #[test]
    fn non_monotone_or_flat_layers_are_rejected() {
        let coords: Vec<Point> = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 0.0], [1.0, 0.0]];
        assert!(matches!(
            build_update_layer(&coords, &[3, 2], &[0, 1], [1.0, 0.0]),
            Err(Error::Structural(_))
        ));
        assert!(matches!(
            build_update_layer(&coords, &[4, 5], &[0, 1], [1.0, 0.0]),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn small_ring_has_expected_counts_and_slip_map() {
        let stat = grid(4, 2, 0.0, 0.0, 1.0, 0.5, STATIC_BLOCK);
        let block = grid(4, 2, 0.0, 0.75, 1.0, 0.5, 1);
        let (mesh, ring) = build_ring(&stat, &block, 1, &spec()).unwrap();
        // Static 15 nodes, ring 2 * 15 - 2 * 3 = 24 nodes.
        assert_eq!(mesh.node_count(), 15 + 24);
        assert_eq!(mesh.element_count(), 8 + 16 + 4);
        assert_eq!(ring.ring_length, 2.0);
        assert_eq!((ring.x_in, ring.x_out), (0.0, 1.0));
        assert!((ring.delta - 0.25).abs() < 1e-15);
        assert!((ring.x_crit - 1.25).abs() < 1e-15);
        assert_eq!(ring.gamma_m_nodes[0].len(), 8);
        assert_eq!(ring.gamma_s_nodes[0].len(), 5);
        for (j, &m) in ring.gamma_m_nodes[0].iter().enumerate() {
            assert!((mesh.node_coords[m][0] - 0.25 * j as f64).abs() < 1e-14);
        }
        // Neighbour map walks the ring backwards and returns after one lap.
        let start = ring.gamma_m_nodes[0][3];
        let mut n = start;
        for k in 1..=8 {
            n = ring.update_map[&n];
            assert_eq!(ring.gamma_m_nodes[0][(3 + 8 - k % 8) % 8], n);
        }
        assert_eq!(n, start);
        let markers: Vec<&str> = mesh.boundary_faces.iter().map(|f| f.marker.as_str()).collect();
        assert_eq!(markers.iter().filter(|m| **m == "top").count(), 2 * 4);
        assert_eq!(markers.iter().filter(|m| **m == "bottom").count(), 4);
        assert_eq!(markers.iter().filter(|m| **m == GAMMA_IN).count(), 2 + 1);
    }

    #[test]
    fn delta_beyond_the_minimal_extent_is_rejected() {
        let stat = grid(4, 2, 0.0, 0.0, 1.0, 0.5, STATIC_BLOCK);
        let block = grid(4, 2, 0.0, 0.75, 1.0, 0.5, 1);
        let mut s = spec();
        s.delta = Some(0.3);
        assert!(matches!(build_ring(&stat, &block, 1, &s), Err(Error::Constraint(_))));
    }

    #[test]
    fn mismatched_block_traces_are_rejected() {
        let stat = grid(4, 2, 0.0, 0.0, 1.0, 0.5, STATIC_BLOCK);
        let mut block = grid(4, 2, 0.0, 0.75, 1.0, 0.5, 1);
        block.node_coords[14][1] += 0.01;
        assert!(matches!(build_ring(&stat, &block, 1, &spec()), Err(Error::Structural(_))));
    }

    #[test]
    fn zero_width_layer_is_rejected() {
        let stat = grid(4, 2, 0.0, 0.0, 1.0, 0.5, STATIC_BLOCK);
        let block = grid(4, 2, 0.0, 0.5, 1.0, 0.5, 1);
        assert!(build_ring(&stat, &block, 1, &spec()).is_err());
    }
}
