use super::linear::{LinearConfig, LinearSolver, LinearSolverKind};
use crate::assembly::{apply_dirichlet, assemble_slab_system, Constraints, FlowField, SlabProblem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative residual reduction that ends the Newton iteration.
    pub newton_tol: f64,
    /// Absolute residual below which the iteration stops regardless of the
    /// reduction, for slabs that start at roundoff.
    pub newton_abs_tol: f64,
    pub newton_max_iters: usize,
    pub linear_solver: LinearSolverKind,
    pub linear_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iters: usize,
    pub deterministic_assembly: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol: 1e-10,
            newton_abs_tol: 1e-14,
            newton_max_iters: 20,
            linear_solver: LinearSolverKind::Direct,
            linear_tol: 1e-12,
            gmres_restart: 200,
            gmres_max_iters: 5000,
            deterministic_assembly: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(self.newton_tol) || !in_unit(self.linear_tol) {
            return Err(Error::Config(format!(
                "tolerances must lie in (0, 1): newton_tol={}, linear_tol={}",
                self.newton_tol, self.linear_tol
            )));
        }
        if !(self.newton_abs_tol >= 0.0) {
            return Err(Error::Config("newton_abs_tol must be non-negative".into()));
        }
        if self.newton_max_iters == 0 {
            return Err(Error::Config("newton_max_iters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn linear_config(&self) -> LinearConfig {
        LinearConfig {
            kind: self.linear_solver,
            tol: self.linear_tol,
            restart: self.gmres_restart,
            max_iters: self.gmres_max_iters,
            deterministic: self.deterministic_assembly,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub flow: FlowField,
    pub iterations: usize,
    /// Euclidean residual norms, starting with the initial iterate.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub failure: Option<String>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Newton iteration on one slab from the seed `flow`. Dirichlet values are
/// imposed on the seed; masked dofs keep their seed values.
///
/// Converged once `|R_k| <= max(newton_tol |R_0|, newton_abs_tol)` after at
/// least one update. Residual growth over three consecutive iterations counts
/// as divergence.
pub fn solve_slab(
    problem: &SlabProblem,
    mut flow: FlowField,
    constraints: &Constraints,
    cfg: &SolverConfig,
    linear: &mut LinearSolver,
) -> Result<NewtonOutcome> {
    apply_dirichlet(&mut flow, constraints);
    let (_, mut r) = assemble_slab_system(problem, &flow, constraints, false);
    let r0 = norm(&r);
    let mut history = vec![r0];
    let target = (cfg.newton_tol * r0).max(cfg.newton_abs_tol);
    let mut growth = 0;
    for k in 1..=cfg.newton_max_iters {
        let clock = std::time::Instant::now();
        let (jac, _) = assemble_slab_system(problem, &flow, constraints, true);
        let jac = jac.expect("jacobian requested");
        log::debug!("jacobian assembly: {:?}", clock.elapsed());
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let clock = std::time::Instant::now();
        let dx = linear.solve(&jac, &rhs)?;
        log::debug!("linear solve: {:?}", clock.elapsed());
        let mut x = flow.to_vector();
        for (i, d) in dx.iter().enumerate() {
            if !constraints.masked(i) {
                x[i] += d;
            }
        }
        flow.set_from_vector(&x);
        if !flow.is_finite() {
            return Ok(NewtonOutcome {
                flow,
                iterations: k,
                residual_history: history,
                converged: false,
                failure: Some("non-finite iterate".into()),
            });
        }
        r = assemble_slab_system(problem, &flow, constraints, false).1;
        let rk = norm(&r);
        let prev = *history.last().unwrap();
        history.push(rk);
        log::debug!("newton {k}: |R| = {rk:.3e}");
        if rk <= target {
            return Ok(NewtonOutcome {
                flow,
                iterations: k,
                residual_history: history,
                converged: true,
                failure: None,
            });
        }
        growth = if rk > prev { growth + 1 } else { 0 };
        if growth >= 3 {
            return Ok(NewtonOutcome {
                flow,
                iterations: k,
                residual_history: history,
                converged: false,
                failure: Some("residual grew over three consecutive iterations".into()),
            });
        }
    }
    Ok(NewtonOutcome {
        flow,
        iterations: cfg.newton_max_iters,
        residual_history: history,
        converged: false,
        failure: Some(format!("no convergence in {} iterations", cfg.newton_max_iters)),
    })
}
