use super::linear::LinearSolver;
use super::newton::{solve_slab, SolverConfig};
use crate::assembly::{build_constraints, Constraints, DofKind, FlowField, SlabProblem};
use crate::cases::Case;
use crate::geom::{dot, sub, transverse, Point};
use crate::mesh::{check_element_validity, BoundaryFace, ElementValidity, Mesh2D, SpaceTimeSlab};
use crate::vring::{
    active_area, advance_motion, conform_structured_boundary, needs_connectivity_update, place_ring, shift_nodes, slip_step,
    update_activity, update_lateral_boundaries, ActivityState, RingTopology,
};
use crate::{Error, Result};

/// Geometry diagnostics of one slip step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipCheck {
    /// Both slab levels compare bit for bit before and after the slip.
    pub coords_unchanged: bool,
    /// Offset along the motion between the layer's moving side and its
    /// reference position.
    pub shear_offset: f64,
    /// Largest deviation of any layer node from the reference layer shape
    /// sheared by `shear_offset`.
    pub shape_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub did_connectivity_update: bool,
    pub n_active_nodes: usize,
    pub n_active_elems: usize,
    pub n_free_dofs: usize,
    pub n_dirichlet_dofs: usize,
    pub n_inactive_dofs: usize,
    pub newton_iters: usize,
    pub converged: bool,
    pub residual_history: Vec<f64>,
    /// Elements skipped this step because they collapsed.
    pub collapsed_elements: Vec<usize>,
    /// Largest `|u - u_exact| / reference_speed` over active nodes, when an
    /// analytic solution exists.
    pub max_rel_error: Option<f64>,
    pub slip_check: Option<SlipCheck>,
}

struct Prepared {
    geometry: SpaceTimeSlab,
    /// Unsnapped upper coordinates, the next step's kinematic positions.
    upper: Vec<Point>,
    activity: ActivityState,
    faces: Vec<BoundaryFace>,
    skip: Vec<bool>,
    collapsed: Vec<usize>,
    did_update: bool,
    slip_check: Option<SlipCheck>,
}

/// State of a running case between time steps.
pub struct Simulation {
    pub case: Case,
    pub cfg: SolverConfig,
    pub mesh: Mesh2D,
    /// Kinematic node positions at the current time, without boundary snapping.
    pub coords: Vec<Point>,
    pub time: f64,
    pub step: usize,
    pub flow: FlowField,
    pub activity: ActivityState,
    /// Geometry of the last solved slab (snapped where applicable).
    pub slab: Option<SpaceTimeSlab>,
    pub faces: Vec<BoundaryFace>,
    pub constraints: Option<Constraints>,
    pub skip: Vec<bool>,
    linear: LinearSolver,
    reference_layer: Vec<Vec<Point>>,
    /// Active area at the start time, the reference of [`Simulation::invariant_violations`].
    pub initial_area: f64,
}

impl Simulation {
    /// Places the ring at the start time and computes the initial activity.
    pub fn new(case: Case, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        case.bcs.validate()?;
        if !(case.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", case.dt)));
        }
        let mesh = case.mesh.clone();
        let mut coords = mesh.node_coords.clone();
        let n = mesh.node_count();
        let (activity, faces) = match &case.ring {
            Some(ring) => {
                ring.validate_mesh(&mesh)?;
                place_ring(ring, &mut coords);
                let act = update_activity(&mesh, ring, &coords, &vec![false; n], None);
                let faces = update_lateral_boundaries(&mesh, ring, &act, &coords)?;
                (act, faces)
            }
            None => {
                mesh.validate()?;
                (ActivityState::all_active(n, mesh.element_count()), mesh.boundary_faces.clone())
            }
        };
        let mut flow = FlowField::zeros(n);
        for (i, &x) in coords.iter().enumerate() {
            let (u, p) = (case.initial)(x);
            flow.u_lower[i] = u;
            flow.u_upper[i] = u;
            flow.u_minus[i] = u;
            flow.p_lower[i] = p;
            flow.p_upper[i] = p;
        }
        let reference_layer = layer_shapes(&mesh, &coords);
        let snapped = match &case.ring {
            Some(ring) => conform_structured_boundary(&mesh, ring, &faces, &coords),
            None => coords.clone(),
        };
        let initial_area = active_area(&mesh, &activity, &snapped, &[]);
        let linear = LinearSolver::new(cfg.linear_config());
        Ok(Simulation {
            time: case.t0,
            case,
            cfg,
            skip: vec![false; mesh.element_count()],
            mesh,
            coords,
            step: 0,
            flow,
            activity,
            slab: None,
            faces,
            constraints: None,
            linear,
            reference_layer,
            initial_area,
        })
    }

    /// Active area of the last slab's upper level, snapped where applicable.
    pub fn active_area(&self) -> f64 {
        match &self.slab {
            Some(g) => active_area(&self.mesh, &self.activity, &g.upper_coords, &self.skip),
            None => self.initial_area,
        }
    }

    /// Broken ring invariants of the current state: block elements whose
    /// active instances are not exactly `n_blocks` (with one block, exactly one
    /// of the element and its virtual copy), and active area drift beyond
    /// `1e-10` relative.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(ring) = &self.case.ring {
            for inst in ring.element_instances(&self.mesh) {
                let active: Vec<usize> = inst.iter().copied().filter(|&e| self.activity.elem_active[e]).collect();
                if active.len() != ring.n_blocks {
                    out.push(format!("step {}: instances {inst:?} have active members {active:?}", self.step));
                }
            }
        }
        let area = self.active_area();
        let rel = (area - self.initial_area).abs() / self.initial_area;
        if !(rel <= 1e-10) {
            out.push(format!("step {}: active area {area} differs from {} by {rel:e} relative", self.step, self.initial_area));
        }
        out
    }

    /// Mesh half of a step: motion, slip, shift, activity, lateral boundaries,
    /// snapping and the element validity check. Only the connectivity is
    /// changed on `self`.
    fn prepare(&mut self) -> Result<Prepared> {
        let (t0, t1) = (self.time, self.time + self.case.dt);
        let n = self.mesh.node_count();
        let lower = self.coords.clone();
        let Some(ring) = &self.case.ring else {
            return self.finish_prepare(Prepared {
                geometry: SpaceTimeSlab { lower_coords: lower.clone(), upper_coords: lower.clone(), t_lower: t0, t_upper: t1 },
                upper: lower,
                activity: ActivityState::all_active(n, self.mesh.element_count()),
                faces: self.mesh.boundary_faces.clone(),
                skip: Vec::new(),
                collapsed: Vec::new(),
                did_update: false,
                slip_check: None,
            });
        };
        let moved = advance_motion(
            &SpaceTimeSlab { lower_coords: lower.clone(), upper_coords: lower, t_lower: t0, t_upper: t1 },
            ring,
            |t| self.case.motion.speed(t),
        );
        let (mut lower, mut upper) = (moved.lower_coords, moved.upper_coords);
        let mut did_update = false;
        let mut slip_check = None;
        if needs_connectivity_update(ring, &upper) {
            let (lo_before, up_before) = (lower.clone(), upper.clone());
            slip_step(&mut self.mesh, ring)?;
            did_update = true;
            let unchanged = bit_equal(&lo_before, &lower) && bit_equal(&up_before, &upper);
            let (offset, dev) = layer_deviation(&self.mesh, &upper, &self.reference_layer, ring);
            slip_check = Some(SlipCheck { coords_unchanged: unchanged, shear_offset: offset, shape_deviation: dev });
        }
        let shifted = shift_nodes(ring, &mut upper, Some(&mut lower));
        let activity = update_activity(&self.mesh, ring, &upper, &shifted, Some(&self.activity));
        let faces = update_lateral_boundaries(&self.mesh, ring, &activity, &upper)?;
        let geometry = SpaceTimeSlab {
            lower_coords: conform_structured_boundary(&self.mesh, ring, &faces, &lower),
            upper_coords: conform_structured_boundary(&self.mesh, ring, &faces, &upper),
            t_lower: t0,
            t_upper: t1,
        };
        self.finish_prepare(Prepared {
            geometry,
            upper,
            activity,
            faces,
            skip: Vec::new(),
            collapsed: Vec::new(),
            did_update,
            slip_check,
        })
    }

    fn finish_prepare(&self, mut pr: Prepared) -> Result<Prepared> {
        pr.skip = vec![false; self.mesh.element_count()];
        for e in 0..self.mesh.element_count() {
            if !pr.activity.elem_active[e] {
                continue;
            }
            match check_element_validity(&pr.geometry, &self.mesh, e) {
                ElementValidity::Valid => {}
                ElementValidity::Collapsing => {
                    pr.skip[e] = true;
                    pr.collapsed.push(e);
                }
                ElementValidity::Twisted => {
                    return Err(Error::TwistedElement {
                        element: e,
                        detail: format!("step {}, t = [{}, {}]", self.step + 1, pr.geometry.t_lower, pr.geometry.t_upper),
                    });
                }
            }
        }
        if !pr.collapsed.is_empty() {
            log::info!("step {}: ignoring {} collapsing elements", self.step + 1, pr.collapsed.len());
        }
        Ok(pr)
    }

    fn commit(&mut self, pr: Prepared, constraints: Option<Constraints>) {
        self.coords = pr.upper;
        self.time = pr.geometry.t_upper;
        self.step += 1;
        self.activity = pr.activity;
        self.faces = pr.faces;
        self.slab = Some(pr.geometry);
        self.constraints = constraints;
        self.skip = pr.skip;
    }

    fn report(&self, pr: &Prepared) -> StepReport {
        StepReport {
            step: self.step + 1,
            time: pr.geometry.t_upper,
            did_connectivity_update: pr.did_update,
            n_active_nodes: pr.activity.active_node_count(),
            n_active_elems: pr.activity.active_element_count(),
            n_free_dofs: 0,
            n_dirichlet_dofs: 0,
            n_inactive_dofs: 0,
            newton_iters: 0,
            converged: false,
            residual_history: Vec::new(),
            collapsed_elements: pr.collapsed.clone(),
            max_rel_error: None,
            slip_check: pr.slip_check,
        }
    }

    /// Moves the mesh through one slab without solving the flow. The flow field
    /// is carried over unchanged and the report has no Newton data.
    pub fn step_kinematics(&mut self) -> Result<StepReport> {
        let pr = self.prepare()?;
        let report = self.report(&pr);
        self.commit(pr, None);
        Ok(report)
    }

    /// Advances one slab.
    pub fn step(&mut self) -> Result<StepReport> {
        let pr = self.prepare()?;
        let n = self.mesh.node_count();
        let seed = self.seed(&pr.activity, &pr.upper);
        let problem = SlabProblem {
            mesh: &self.mesh,
            slab: &pr.geometry,
            activity: &pr.activity,
            faces: &pr.faces,
            params: &self.case.params,
            bcs: &self.case.bcs,
            skip: &pr.skip,
            deterministic: self.cfg.deterministic_assembly,
        };
        let constraints = build_constraints(&problem);
        let outcome = solve_slab(&problem, seed, &constraints, &self.cfg, &mut self.linear)?;

        let mut report = self.report(&pr);
        report.n_free_dofs = constraints.count(DofKind::Free);
        report.n_dirichlet_dofs = constraints.count(DofKind::Dirichlet);
        report.n_inactive_dofs = constraints.count(DofKind::Inactive);
        report.newton_iters = outcome.iterations;
        report.converged = outcome.converged;
        report.residual_history = outcome.residual_history.clone();
        if let Some(exact) = &self.case.exact {
            let g = &pr.geometry;
            let mut worst: f64 = 0.0;
            for i in (0..n).filter(|&i| constraints.kind[3 * i] != DofKind::Inactive) {
                let pairs = [(outcome.flow.u_lower[i], g.lower_coords[i], g.t_lower), (outcome.flow.u_upper[i], g.upper_coords[i], g.t_upper)];
                for (u, x, t) in pairs {
                    worst = worst.max((u[0] - exact(x, t)[0]).abs() / self.case.reference_speed);
                }
            }
            report.max_rel_error = Some(worst);
        }
        if let Some(reason) = &outcome.failure {
            return Err(Error::NewtonFailed { step: report.step, reason: reason.clone() });
        }
        self.flow = outcome.flow;
        self.commit(pr, Some(constraints));
        Ok(report)
    }

    /// Newton seed: the previous upper level on both levels; nodes that were
    /// inactive copy the nearest previously active node, with transverse
    /// distance weighted ten times heavier than distance along the motion.
    fn seed(&self, activity: &ActivityState, upper: &[Point]) -> FlowField {
        let n = self.mesh.node_count();
        let prev = &self.flow;
        let mut seed = FlowField {
            u_lower: prev.u_upper.clone(),
            u_upper: prev.u_upper.clone(),
            p_lower: prev.p_upper.clone(),
            p_upper: prev.p_upper.clone(),
            u_minus: prev.u_upper.clone(),
        };
        let dir = self.case.ring.as_ref().map_or([1.0, 0.0], |r| r.direction);
        let donors: Vec<usize> = (0..n).filter(|&i| self.activity.node_active[i]).collect();
        for i in (0..n).filter(|&i| activity.node_active[i] && !self.activity.node_active[i]) {
            let best = donors.iter().copied().min_by(|&a, &b| {
                let da = metric(sub(upper[a], upper[i]), dir);
                let db = metric(sub(upper[b], upper[i]), dir);
                da.total_cmp(&db)
            });
            if let Some(d) = best {
                seed.u_lower[i] = prev.u_upper[d];
                seed.u_upper[i] = prev.u_upper[d];
                seed.p_lower[i] = prev.p_upper[d];
                seed.p_upper[i] = prev.p_upper[d];
            }
        }
        seed
    }

    pub fn run(&mut self, n_steps: usize, mut sink: impl FnMut(&Simulation, &StepReport) -> Result<()>) -> Result<Vec<StepReport>> {
        let mut reports = Vec::with_capacity(n_steps);
        for _ in 0..n_steps {
            let r = self.step()?;
            sink(self, &r)?;
            reports.push(r);
        }
        Ok(reports)
    }
}

fn metric(d: Point, dir: Point) -> f64 {
    let a = dot(d, dir);
    let t = transverse(d, dir);
    a * a + 100.0 * t * t
}

fn bit_equal(a: &[Point], b: &[Point]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(p, q)| p[0].to_bits() == q[0].to_bits() && p[1].to_bits() == q[1].to_bits())
}

fn layer_shapes(mesh: &Mesh2D, coords: &[Point]) -> Vec<Vec<Point>> {
    mesh.elements
        .iter()
        .filter(|e| e.is_update_layer)
        .map(|e| e.nodes.iter().map(|&k| coords[k]).collect())
        .collect()
}

/// Common shear offset of the layer against its reference shape and the largest
/// deviation from that sheared reference.
fn layer_deviation(mesh: &Mesh2D, coords: &[Point], reference: &[Vec<Point>], ring: &RingTopology) -> (f64, f64) {
    let dir = ring.direction;
    let wrap = |s: f64| s - ring.ring_length * (s / ring.ring_length).round();
    let now = layer_shapes(mesh, coords);
    let moving = mesh.moving_node_flags();
    let layer: Vec<&Vec<usize>> = mesh.elements.iter().filter(|e| e.is_update_layer).map(|e| &e.nodes).collect();
    let mut offsets = Vec::new();
    for ((nodes, cur), re) in layer.iter().zip(&now).zip(reference) {
        for (k, &node) in nodes.iter().enumerate() {
            if moving[node] {
                offsets.push(wrap(dot(sub(cur[k], re[k]), dir)));
            }
        }
    }
    let offset = offsets.iter().sum::<f64>() / offsets.len().max(1) as f64;
    let mut dev: f64 = 0.0;
    for ((nodes, cur), re) in layer.iter().zip(&now).zip(reference) {
        for (k, &node) in nodes.iter().enumerate() {
            let s = if moving[node] { offset } else { 0.0 };
            let d = sub(cur[k], re[k]);
            dev = dev.max((wrap(dot(d, dir)) - s).abs()).max(transverse(d, dir).abs());
        }
    }
    (offset, dev)
}

/// Runs `n_steps` slabs of `case`, handing every report to `sink`.
pub fn run_time_loop(
    case: Case,
    cfg: SolverConfig,
    n_steps: usize,
    sink: impl FnMut(&Simulation, &StepReport) -> Result<()>,
) -> Result<(Simulation, Vec<StepReport>)> {
    let mut sim = Simulation::new(case, cfg)?;
    let reports = sim.run(n_steps, sink)?;
    Ok((sim, reports))
}
