use ringshear::assembly::{assemble_slab_system, build_constraints, SlabProblem};
use ringshear::cases::{generate_couette_case, CouetteParams};
use ringshear::solver::{linear_solve, LinearConfig, LinearSolverKind, Simulation, SolverConfig};

fn couette() -> Simulation {
    Simulation::new(generate_couette_case(&CouetteParams::default()).unwrap(), SolverConfig::default()).unwrap()
}

#[test]
fn couette_steps_converge_in_one_newton_iteration() {
    let mut sim = couette();
    for _ in 0..3 {
        let r = sim.step().unwrap();
        assert!(r.converged);
        assert_eq!(r.newton_iters, 1, "{:?}", r.residual_history);
        assert!(r.max_rel_error.unwrap() <= 1e-10);
    }
}

#[test]
fn iterative_and_direct_solves_agree_on_the_couette_system() {
    let mut sim = couette();
    sim.step_kinematics().unwrap();
    let slab = sim.slab.as_ref().unwrap();
    let p = SlabProblem {
        mesh: &sim.mesh,
        slab,
        activity: &sim.activity,
        faces: &sim.faces,
        params: &sim.case.params,
        bcs: &sim.case.bcs,
        skip: &sim.skip,
        deterministic: true,
    };
    let c = build_constraints(&p);
    let (jac, _) = assemble_slab_system(&p, &sim.flow, &c, true);
    let jac = jac.unwrap();
    // Right-hand side with a known smooth solution on the free dofs.
    let x_true: Vec<f64> = (0..jac.n).map(|i| if c.masked(i) { 0.0 } else { (i as f64 * 0.37).sin() }).collect();
    let b = jac.mul_vec(&x_true);
    let cfg = |kind| LinearConfig { kind, tol: 1e-14, restart: 300, max_iters: 20000, deterministic: true };
    let direct = linear_solve(&jac, &b, &cfg(LinearSolverKind::Direct)).unwrap();
    let iterative = linear_solve(&jac, &b, &cfg(LinearSolverKind::Iterative)).unwrap();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = direct.iter().zip(&iterative).map(|(a, b)| a - b).collect();
    assert!(norm(&diff) <= 1e-9 * norm(&direct), "{:e}", norm(&diff) / norm(&direct));
}
