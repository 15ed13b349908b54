use rayon::prelude::*;

use super::{dof, element_residual, BCSet, Dual, ElementGeometry, FlowField, MaterialParams, TermMask};
use crate::geom::Point;
use crate::mesh::{gauss2, BoundaryFace, Mesh2D, Shape, SpaceTimeSlab};
use crate::mesh::shape::time_basis;
use crate::sparse::CsrMatrix;
use crate::vring::ActivityState;

/// Inputs of one slab assembly that stay fixed over the Newton iteration.
#[derive(Clone, Copy)]
pub struct SlabProblem<'a> {
    pub mesh: &'a Mesh2D,
    pub slab: &'a SpaceTimeSlab,
    pub activity: &'a ActivityState,
    /// Current boundary faces, including the recomputed lateral ones.
    pub faces: &'a [BoundaryFace],
    pub params: &'a MaterialParams,
    pub bcs: &'a BCSet,
    /// Elements excluded this slab (collapsing).
    pub skip: &'a [bool],
    pub deterministic: bool,
}

impl SlabProblem<'_> {
    pub fn assembled(&self, e: usize) -> bool {
        self.activity.elem_active[e] && !self.skip.get(e).copied().unwrap_or(false)
    }

    pub fn dof_count(&self) -> usize {
        6 * self.mesh.node_count()
    }
}

/// Elements whose jump term is integrated: active now and in the previous slab,
/// with every node active in the previous slab and not skipped.
pub fn jump_flags(mesh: &Mesh2D, activity: &ActivityState, skip: &[bool]) -> Vec<bool> {
    mesh.elements
        .iter()
        .enumerate()
        .map(|(e, el)| {
            activity.elem_active[e]
                && activity.elem_active_prev[e]
                && !skip.get(e).copied().unwrap_or(false)
                && el.nodes.iter().all(|&n| activity.node_active_prev[n])
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    Free,
    Dirichlet,
    /// Belongs to no assembled element.
    Inactive,
}

/// Per-dof classification and prescribed values.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraints {
    pub kind: Vec<DofKind>,
    /// Prescribed value of Dirichlet dofs, zero elsewhere.
    pub values: Vec<f64>,
}

impl Constraints {
    #[inline]
    pub fn masked(&self, i: usize) -> bool {
        self.kind[i] != DofKind::Free
    }

    pub fn free_count(&self) -> usize {
        self.kind.iter().filter(|&&k| k == DofKind::Free).count()
    }

    pub fn count(&self, kind: DofKind) -> usize {
        self.kind.iter().filter(|&&k| k == kind).count()
    }
}

/// Classifies every dof of the slab. Nodes outside all assembled elements are
/// inactive; nodes on current Dirichlet faces carry `g` at both levels (first
/// matching marker wins); the pressure pin fixes one node's pressure.
pub fn build_constraints(p: &SlabProblem) -> Constraints {
    let n = p.mesh.node_count();
    let mut kind = vec![DofKind::Free; 6 * n];
    let mut values = vec![0.0; 6 * n];
    let mut used = vec![false; n];
    for (e, el) in p.mesh.elements.iter().enumerate() {
        if p.assembled(e) {
            for &k in &el.nodes {
                used[k] = true;
            }
        }
    }
    // Highest-priority Dirichlet marker per node.
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; p.bcs.dirichlet.len()];
    for f in p.faces {
        if !p.assembled(f.element) {
            continue;
        }
        if let Some((k, _)) = p.bcs.dirichlet_for(&f.marker) {
            seen[k] = true;
            let (a, b) = p.mesh.elements[f.element].edge(f.edge);
            for node in [a, b] {
                if owner[node].map_or(true, |o| k < o) {
                    owner[node] = Some(k);
                }
            }
        }
    }
    for (k, (m, _)) in p.bcs.dirichlet.iter().enumerate() {
        if !seen[k] {
            log::warn!("Dirichlet marker {m} has no active faces in this slab");
        }
    }
    let levels = [(&p.slab.lower_coords, p.slab.t_lower), (&p.slab.upper_coords, p.slab.t_upper)];
    for i in 0..n {
        if !used[i] {
            for l in 0..2 {
                for c in 0..3 {
                    kind[dof(n, l, i, c)] = DofKind::Inactive;
                }
            }
            continue;
        }
        if let Some(k) = owner[i] {
            let g = &p.bcs.dirichlet[k].1;
            for (l, (coords, t)) in levels.iter().enumerate() {
                let v = g(coords[i], *t);
                for c in 0..2 {
                    kind[dof(n, l, i, c)] = DofKind::Dirichlet;
                    values[dof(n, l, i, c)] = v[c];
                }
            }
        }
    }
    if let Some((node, value)) = p.bcs.pressure_pin {
        if node < n && used[node] {
            for l in 0..2 {
                kind[dof(n, l, node, 2)] = DofKind::Dirichlet;
                values[dof(n, l, node, 2)] = value;
            }
        }
    }
    Constraints { kind, values }
}

/// Writes the prescribed values into the iterate.
pub fn apply_dirichlet(flow: &mut FlowField, c: &Constraints) {
    let mut x = flow.to_vector();
    for (i, k) in c.kind.iter().enumerate() {
        if *k == DofKind::Dirichlet {
            x[i] = c.values[i];
        }
    }
    flow.set_from_vector(&x);
}

struct Local {
    dofs: Vec<usize>,
    res: Vec<f64>,
    jac: Vec<f64>,
}

fn element_dofs(n: usize, nodes: &[usize]) -> Vec<usize> {
    let n_sp = nodes.len();
    (0..2 * n_sp)
        .flat_map(|a| {
            let (l, i) = (a / n_sp, a % n_sp);
            (0..3).map(move |c| dof(n, l, nodes[i], c))
        })
        .collect()
}

fn local_ad<const N: usize>(
    geom: &ElementGeometry,
    xl: &[f64],
    u_minus: &[[f64; 2]],
    params: &MaterialParams,
    terms: TermMask,
) -> (Vec<f64>, Vec<f64>) {
    let m = xl.len();
    debug_assert!(m <= N);
    let state: Vec<Dual<N>> = xl.iter().enumerate().map(|(k, &v)| Dual::var(v, k)).collect();
    let r = element_residual(geom, &state, u_minus, params, terms);
    let res = r.iter().map(|d| d.v).collect();
    let mut jac = vec![0.0; m * m];
    for (i, d) in r.iter().enumerate() {
        jac[i * m..(i + 1) * m].copy_from_slice(&d.d[..m]);
    }
    (res, jac)
}

/// Residual of the full stabilized weak form at `flow` and, when requested, its
/// exact Jacobian. Masked dofs get a zero residual and a unit diagonal row and
/// column, so the Newton update leaves them untouched.
pub fn assemble_slab_system(
    p: &SlabProblem,
    flow: &FlowField,
    c: &Constraints,
    with_jacobian: bool,
) -> (Option<CsrMatrix>, Vec<f64>) {
    let n = p.mesh.node_count();
    let ndof = 6 * n;
    let x = flow.to_vector();
    let jump = jump_flags(p.mesh, p.activity, p.skip);
    let elems: Vec<usize> = (0..p.mesh.element_count()).filter(|&e| p.assembled(e)).collect();

    let work = |&e: &usize| -> Local {
        let el = &p.mesh.elements[e];
        let (lo, up) = p.slab.element_levels(p.mesh, e);
        let geom = ElementGeometry::new(el.shape, &lo, &up, p.slab.t_lower, p.slab.t_upper);
        let dofs = element_dofs(n, &el.nodes);
        let xl: Vec<f64> = dofs.iter().map(|&d| x[d]).collect();
        let um: Vec<[f64; 2]> = el.nodes.iter().map(|&k| flow.u_minus[k]).collect();
        let terms = if jump[e] { TermMask::ALL } else { TermMask::NO_JUMP };
        if with_jacobian {
            let (res, jac) = match el.shape {
                Shape::Tri3 => local_ad::<18>(&geom, &xl, &um, p.params, terms),
                Shape::Quad4 => local_ad::<24>(&geom, &xl, &um, p.params, terms),
            };
            Local { dofs, res, jac }
        } else {
            let res = element_residual(&geom, &xl, &um, p.params, terms);
            Local { dofs, res, jac: Vec::new() }
        }
    };
    let locals: Vec<Local> = if p.deterministic {
        elems.iter().map(work).collect()
    } else {
        elems.par_iter().map(work).collect()
    };

    let mut r = vec![0.0; ndof];
    for loc in &locals {
        for (k, &d) in loc.dofs.iter().enumerate() {
            r[d] += loc.res[k];
        }
    }
    add_neumann(p, &mut r);
    for (i, v) in r.iter_mut().enumerate() {
        if c.masked(i) {
            *v = 0.0;
        }
    }

    let jac = with_jacobian.then(|| {
        let mut t = Vec::with_capacity(locals.iter().map(|l| l.jac.len()).sum::<usize>() + ndof);
        for loc in &locals {
            let m = loc.dofs.len();
            for (a, &da) in loc.dofs.iter().enumerate() {
                if c.masked(da) {
                    continue;
                }
                for (b, &db) in loc.dofs.iter().enumerate() {
                    if !c.masked(db) {
                        t.push((da, db, loc.jac[a * m + b]));
                    }
                }
            }
        }
        for i in (0..ndof).filter(|&i| c.masked(i)) {
            t.push((i, i, 1.0));
        }
        CsrMatrix::from_triplets(ndof, t)
    });
    (jac, r)
}

/// Subtracts `int w . h dP` over Neumann faces of assembled elements.
fn add_neumann(p: &SlabProblem, r: &mut [f64]) {
    let n = p.mesh.node_count();
    let dt = p.slab.dt();
    let g = gauss2();
    for f in p.faces {
        if !p.assembled(f.element) {
            continue;
        }
        let Some(h) = p.bcs.neumann_for(&f.marker) else { continue };
        let (a, b) = p.mesh.elements[f.element].edge(f.edge);
        for &(theta, wt) in &g {
            let tb = time_basis(theta);
            let t = tb[0] * p.slab.t_lower + tb[1] * p.slab.t_upper;
            let lerp = |k: usize| -> Point {
                let (lo, up) = (p.slab.lower_coords[k], p.slab.upper_coords[k]);
                [tb[0] * lo[0] + tb[1] * up[0], tb[0] * lo[1] + tb[1] * up[1]]
            };
            let (xa, xb) = (lerp(a), lerp(b));
            let half_len = 0.5 * ((xb[0] - xa[0]).powi(2) + (xb[1] - xa[1]).powi(2)).sqrt();
            for &(s, ws) in &g {
                let na = 0.5 * (1.0 - s);
                let nb = 0.5 * (1.0 + s);
                let x = [na * xa[0] + nb * xb[0], na * xa[1] + nb * xb[1]];
                let hv = h(x, t);
                let w = wt * ws * half_len * 0.5 * dt;
                for l in 0..2 {
                    for (node, ns) in [(a, na), (b, nb)] {
                        for c in 0..2 {
                            r[dof(n, l, node, c)] -= ns * tb[l] * hv[c] * w;
                        }
                    }
                }
            }
        }
    }
}
