use proptest::prelude::*;
use ringshear::cases::{generate_couette_case, CouetteParams};
use ringshear::solver::{Simulation, SolverConfig};

fn params(coarse: bool, speed: f64, dt: f64, delta_frac: f64) -> CouetteParams {
    let base = CouetteParams { plate_speed: speed, dt, ..Default::default() };
    let p = if coarse {
        CouetteParams { h_static: 0.65, h_layer: 0.05, h_moving: 0.3, spacing: 0.05, ..base }
    } else {
        base
    };
    CouetteParams { delta: Some(delta_frac * p.spacing), ..p }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ring_invariants_hold_along_the_motion(
        coarse in any::<bool>(),
        speed in 0.005f64..0.05,
        dt in 0.05f64..0.5,
        delta_frac in 0.3f64..1.0,
        steps in 20usize..120,
    ) {
        let p = params(coarse, speed, dt, delta_frac);
        let (delta, spacing) = (p.delta.unwrap(), p.spacing);
        prop_assume!(speed * dt <= delta);
        let mut sim = Simulation::new(generate_couette_case(&p).unwrap(), SolverConfig::default()).unwrap();
        let mut updates = 0usize;
        for _ in 0..steps {
            let r = sim.step_kinematics().unwrap();
            updates += r.did_connectivity_update as usize;
            let broken = sim.invariant_violations();
            prop_assert!(broken.is_empty(), "{:?}", &broken[..broken.len().min(3)]);
            prop_assert!((sim.active_area() - 1.0).abs() <= 1e-10);
            if let Some(c) = r.slip_check {
                prop_assert!(c.coords_unchanged);
                prop_assert!(c.shape_deviation <= 1e-12);
            }
        }
        // Each slip advances the layer connectivity by one node spacing.
        let expected = (speed * dt * steps as f64 / spacing).floor() as i64;
        prop_assert!((updates as i64 - expected).abs() <= 1, "{updates} updates, expected about {expected}");
    }
}
