use std::path::PathBuf;

use super::{write_error_csv, write_mesh, write_vtk_snapshot, CaseConfig};
use crate::solver::{Simulation, StepReport};
use crate::{Error, Result};

/// Runs a configured case, writing snapshots every `write_every` steps and
/// `errors.csv` into `out` when given. `on_step` sees every completed step.
pub fn run_config(cfg: &CaseConfig, mut on_step: impl FnMut(&Simulation, &StepReport)) -> Result<Vec<StepReport>> {
    let case = cfg.build_case()?;
    let mut sim = Simulation::new(case, cfg.solver_config())?;
    let out: Option<PathBuf> = cfg.out.clone();
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_mesh(&sim.mesh, sim.case.ring.as_ref(), dir.join("mesh.msh"))?;
    }
    let mut reports = Vec::with_capacity(cfg.n_steps);
    let result = (|| {
        for _ in 0..cfg.n_steps {
            let r = sim.step()?;
            if cfg.check_invariants {
                let broken = sim.invariant_violations();
                if !broken.is_empty() {
                    return Err(Error::Structural(format!("ring invariants violated: {}", broken.join("; "))));
                }
            }
            if let (Some(dir), true) = (&out, cfg.write_every > 0 && r.step % cfg.write_every == 0) {
                let slab = sim.slab.as_ref().expect("solved step has a slab");
                let path = dir.join(format!("snapshot_{:05}.vtk", r.step));
                write_vtk_snapshot(&sim.mesh, slab, &sim.activity, &sim.flow, r.did_connectivity_update, path)?;
            }
            on_step(&sim, &r);
            reports.push(r);
        }
        Ok(())
    })();
    if let Some(dir) = &out {
        write_error_csv(&reports, dir.join("errors.csv"))?;
    }
    result.map(|_| reports)
}
