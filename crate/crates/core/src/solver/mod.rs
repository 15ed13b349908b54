//! Newton iteration per slab, linear solvers and the time loop.

mod linear;
mod newton;
mod time_loop;

pub use linear::{gmres_ilu0, linear_solve, LinearConfig, LinearSolver, LinearSolverKind};
pub use newton::{solve_slab, NewtonOutcome, SolverConfig};
pub use time_loop::{run_time_loop, Simulation, SlipCheck, StepReport};
