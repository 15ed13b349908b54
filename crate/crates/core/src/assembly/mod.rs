//! Stabilized space-time weak form of incompressible Navier-Stokes on one slab.
//!
//! Unknowns are velocity and pressure at every node on both slab levels. The
//! global dof of component `c` (0, 1 velocity, 2 pressure) of node `i` on level
//! `l` (0 lower, 1 upper) is `(l * n_nodes + i) * 3 + c`.

mod dual;
mod kernel;
mod system;

use std::fmt;
use std::sync::Arc;

use crate::geom::Point;
use crate::{Error, Result};

pub use dual::{Dual, Scalar};
pub use kernel::{
    compute_tau, element_residual, jump_term_contribution, strong_residual, ElementGeometry,
    QpGeometry, StrongResidual, TermMask,
};
pub use system::{
    apply_dirichlet, assemble_slab_system, build_constraints, jump_flags, Constraints, DofKind,
    SlabProblem,
};

/// Space- and time-dependent vector field `(x, t) -> v`.
pub type VectorFn = Arc<dyn Fn(Point, f64) -> [f64; 2] + Send + Sync>;

pub fn vector_fn(f: impl Fn(Point, f64) -> [f64; 2] + Send + Sync + 'static) -> VectorFn {
    Arc::new(f)
}

#[inline]
pub fn dof(n_nodes: usize, level: usize, node: usize, comp: usize) -> usize {
    (level * n_nodes + node) * 3 + comp
}

#[derive(Clone)]
pub enum BodyForce {
    Constant([f64; 2]),
    Field(VectorFn),
}

impl BodyForce {
    #[inline]
    pub fn eval(&self, x: Point, t: f64) -> [f64; 2] {
        match self {
            BodyForce::Constant(f) => *f,
            BodyForce::Field(f) => f(x, t),
        }
    }
}

impl fmt::Debug for BodyForce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyForce::Constant(v) => write!(f, "Constant({v:?})"),
            BodyForce::Field(_) => write!(f, "Field(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaterialParams {
    pub rho: f64,
    pub mu: f64,
    pub body_force: BodyForce,
}

impl MaterialParams {
    pub fn new(rho: f64, mu: f64) -> Result<Self> {
        if !(rho > 0.0) || !(mu > 0.0) {
            return Err(Error::Config(format!("density and viscosity must be positive, got rho={rho}, mu={mu}")));
        }
        Ok(MaterialParams {
            rho,
            mu,
            body_force: BodyForce::Constant([0.0, 0.0]),
        })
    }

    pub fn nu(&self) -> f64 {
        self.mu / self.rho
    }
}

/// Nodal velocity and pressure on both slab levels, plus the upper-level velocity
/// of the previous slab.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub u_lower: Vec<[f64; 2]>,
    pub u_upper: Vec<[f64; 2]>,
    pub p_lower: Vec<f64>,
    pub p_upper: Vec<f64>,
    pub u_minus: Vec<[f64; 2]>,
}

impl FlowField {
    pub fn zeros(n: usize) -> Self {
        FlowField {
            u_lower: vec![[0.0; 2]; n],
            u_upper: vec![[0.0; 2]; n],
            p_lower: vec![0.0; n],
            p_upper: vec![0.0; n],
            u_minus: vec![[0.0; 2]; n],
        }
    }

    /// Field equal to `u(x)`, `p(x)` on both levels and in the trace.
    pub fn from_fn(coords: &[Point], u: impl Fn(Point) -> [f64; 2], p: impl Fn(Point) -> f64) -> Self {
        let uu: Vec<[f64; 2]> = coords.iter().map(|&x| u(x)).collect();
        let pp: Vec<f64> = coords.iter().map(|&x| p(x)).collect();
        FlowField {
            u_lower: uu.clone(),
            u_upper: uu.clone(),
            p_lower: pp.clone(),
            p_upper: pp,
            u_minus: uu,
        }
    }

    pub fn node_count(&self) -> usize {
        self.u_lower.len()
    }

    pub fn dof_count(&self) -> usize {
        6 * self.node_count()
    }

    /// Unknowns in global dof order.
    pub fn to_vector(&self) -> Vec<f64> {
        let n = self.node_count();
        let mut x = vec![0.0; 6 * n];
        for (l, (u, p)) in [(&self.u_lower, &self.p_lower), (&self.u_upper, &self.p_upper)].into_iter().enumerate() {
            for i in 0..n {
                x[dof(n, l, i, 0)] = u[i][0];
                x[dof(n, l, i, 1)] = u[i][1];
                x[dof(n, l, i, 2)] = p[i];
            }
        }
        x
    }

    /// Overwrites the unknowns from a global dof vector; the trace is kept.
    pub fn set_from_vector(&mut self, x: &[f64]) {
        let n = self.node_count();
        for (l, (u, p)) in [(&mut self.u_lower, &mut self.p_lower), (&mut self.u_upper, &mut self.p_upper)]
            .into_iter()
            .enumerate()
        {
            for i in 0..n {
                u[i] = [x[dof(n, l, i, 0)], x[dof(n, l, i, 1)]];
                p[i] = x[dof(n, l, i, 2)];
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
            && self.u_minus.iter().all(|u| u[0].is_finite() && u[1].is_finite())
    }
}

/// Boundary conditions by face marker. Dirichlet markers earlier in the list take
/// precedence at shared nodes.
#[derive(Clone, Default)]
pub struct BCSet {
    pub dirichlet: Vec<(String, VectorFn)>,
    pub neumann: Vec<(String, VectorFn)>,
    /// Node whose pressure is fixed on both levels, with the value.
    pub pressure_pin: Option<(usize, f64)>,
}

impl BCSet {
    pub fn validate(&self) -> Result<()> {
        for (m, _) in &self.dirichlet {
            if self.neumann.iter().any(|(n, _)| n == m) {
                return Err(Error::Config(format!("marker {m} has both Dirichlet and Neumann conditions")));
            }
        }
        Ok(())
    }

    pub fn dirichlet_for(&self, marker: &str) -> Option<(usize, &VectorFn)> {
        self.dirichlet.iter().enumerate().find(|(_, (m, _))| m == marker).map(|(k, (_, f))| (k, f))
    }

    pub fn neumann_for(&self, marker: &str) -> Option<&VectorFn> {
        self.neumann.iter().find(|(m, _)| m == marker).map(|(_, f)| f)
    }
}

impl fmt::Debug for BCSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BCSet")
            .field("dirichlet", &self.dirichlet.iter().map(|(m, _)| m.as_str()).collect::<Vec<_>>())
            .field("neumann", &self.neumann.iter().map(|(m, _)| m.as_str()).collect::<Vec<_>>())
            .field("pressure_pin", &self.pressure_pin)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabParams {
    pub tau_mom: f64,
    pub tau_cont: f64,
}
