//! C interface to the ringshear solver.
//!
//! Simulations live behind an opaque [`RingshearSim`] handle. Every function
//! returns a [`RingshearStatus`]; on failure the message is kept per thread and
//! read with [`ringshear_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use ringshear::cases::{generate_couette_case, generate_packaging_case, CouetteParams, PackagingParams};
use ringshear::io::{parse_config, write_vtk_snapshot, ConfigOverrides};
use ringshear::solver::{Simulation, SolverConfig};
use ringshear::Error;

/// Opaque simulation handle.
pub struct RingshearSim {
    sim: Simulation,
    last_update: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingshearStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Parse = 4,
    Structural = 5,
    TwistedElement = 6,
    DomainVanished = 7,
    LinearSolver = 8,
    NewtonFailed = 9,
    Io = 10,
    Panic = 11,
}

/// Summary of one time step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RingshearStepReport {
    pub step: usize,
    pub time: f64,
    pub did_connectivity_update: bool,
    pub converged: bool,
    pub newton_iters: usize,
    pub n_active_nodes: usize,
    pub n_active_elems: usize,
    pub final_residual: f64,
    /// NaN when the case has no analytic solution.
    pub max_rel_error: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> RingshearStatus {
    match e {
        Error::Structural(_) | Error::Constraint(_) => RingshearStatus::Structural,
        Error::Parse { .. } => RingshearStatus::Parse,
        Error::Config(_) => RingshearStatus::Config,
        Error::TwistedElement { .. } => RingshearStatus::TwistedElement,
        Error::DomainVanished => RingshearStatus::DomainVanished,
        Error::SingularMatrix { .. } | Error::LinearNotConverged { .. } => RingshearStatus::LinearSolver,
        Error::NewtonFailed { .. } => RingshearStatus::NewtonFailed,
        Error::Io { .. } => RingshearStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (RingshearStatus, String)>) -> RingshearStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RingshearStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            RingshearStatus::Panic
        }
    }
}

fn fail(e: Error) -> (RingshearStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RingshearStatus, String) {
    (RingshearStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, (RingshearStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: the caller passes a NUL-terminated string that outlives the call.
    let s = unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| (RingshearStatus::InvalidArgument, format!("{what} is not UTF-8")))?;
    Ok(Path::new(s))
}

fn publish(out: *mut *mut RingshearSim, sim: Simulation) -> Result<(), (RingshearStatus, String)> {
    let handle = Box::into_raw(Box::new(RingshearSim { sim, last_update: false }));
    // SAFETY: `out` was checked to be non-null by the caller of this helper.
    unsafe { *out = handle };
    Ok(())
}

/// Message of the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ringshear_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates the Couette validation case with its default parameters.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn ringshear_sim_new_couette(out: *mut *mut RingshearSim) -> RingshearStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let case = generate_couette_case(&CouetteParams::default()).map_err(fail)?;
        publish(out, Simulation::new(case, SolverConfig::default()).map_err(fail)?)
    })
}

/// Creates the packaging machine case at resolution factor `scale` in (0, 1].
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn ringshear_sim_new_packaging(scale: f64, out: *mut *mut RingshearSim) -> RingshearStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let case = generate_packaging_case(&PackagingParams { scale, ..Default::default() }).map_err(fail)?;
        publish(out, Simulation::new(case, SolverConfig::default()).map_err(fail)?)
    })
}

/// Creates a simulation from a key-value configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer to
/// writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn ringshear_sim_new_from_config(path: *const c_char, out: *mut *mut RingshearSim) -> RingshearStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: forwarded caller contract.
        let path = unsafe { path_arg(path, "path") }?;
        let cfg = parse_config(Some(path), &ConfigOverrides::default()).map_err(fail)?;
        let case = cfg.build_case().map_err(fail)?;
        publish(out, Simulation::new(case, cfg.solver_config()).map_err(fail)?)
    })
}

/// Advances one time step. `report` may be null.
///
/// # Safety
/// `sim` must be a live handle; `report`, when non-null, must point to
/// writable storage.
#[no_mangle]
pub unsafe extern "C" fn ringshear_sim_step(sim: *mut RingshearSim, report: *mut RingshearStepReport) -> RingshearStatus {
    guard(|| {
        // SAFETY: the caller passes a live handle from one of the constructors.
        let h = unsafe { sim.as_mut() }.ok_or_else(|| null("sim"))?;
        let r = h.sim.step().map_err(fail)?;
        h.last_update = r.did_connectivity_update;
        if !report.is_null() {
            let out = RingshearStepReport {
                step: r.step,
                time: r.time,
                did_connectivity_update: r.did_connectivity_update,
                converged: r.converged,
                newton_iters: r.newton_iters,
                n_active_nodes: r.n_active_nodes,
                n_active_elems: r.n_active_elems,
                final_residual: r.residual_history.last().copied().unwrap_or(0.0),
                max_rel_error: r.max_rel_error.unwrap_or(f64::NAN),
            };
            // SAFETY: non-null and writable per the caller contract.
            unsafe { *report = out };
        }
        Ok(())
    })
}

/// Number of mesh nodes, active or not.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ringshear_sim_node_count(sim: *const RingshearSim, out: *mut usize) -> RingshearStatus {
    guard(|| {
        // SAFETY: caller contract.
        let h = unsafe { sim.as_ref() }.ok_or_else(|| null("sim"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: caller contract.
        unsafe { *out = h.sim.mesh.node_count() };
        Ok(())
    })
}

/// Current simulation time.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ringshear_sim_time(sim: *const RingshearSim, out: *mut f64) -> RingshearStatus {
    guard(|| {
        // SAFETY: caller contract.
        let h = unsafe { sim.as_ref() }.ok_or_else(|| null("sim"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: caller contract.
        unsafe { *out = h.sim.time };
        Ok(())
    })
}

/// Copies the current nodal velocity as interleaved `(u, v)` pairs into
/// `buf`, which must hold at least `2 * node_count` values.
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ringshear_sim_copy_velocity(sim: *const RingshearSim, buf: *mut f64, len: usize) -> RingshearStatus {
    guard(|| {
        // SAFETY: caller contract.
        let h = unsafe { sim.as_ref() }.ok_or_else(|| null("sim"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let u = &h.sim.flow.u_upper;
        if len < 2 * u.len() {
            return Err((RingshearStatus::InvalidArgument, format!("buffer holds {len} values, {} needed", 2 * u.len())));
        }
        // SAFETY: `buf` is valid for `len >= 2 * u.len()` writes.
        let dst = unsafe { std::slice::from_raw_parts_mut(buf, 2 * u.len()) };
        for (d, s) in dst.chunks_exact_mut(2).zip(u) {
            d.copy_from_slice(s);
        }
        Ok(())
    })
}

/// Writes the active part of the last solved slab as a legacy VTK file.
///
/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ringshear_sim_write_vtk(sim: *const RingshearSim, path: *const c_char) -> RingshearStatus {
    guard(|| {
        // SAFETY: caller contract.
        let h = unsafe { sim.as_ref() }.ok_or_else(|| null("sim"))?;
        // SAFETY: caller contract.
        let path = unsafe { path_arg(path, "path") }?;
        let slab = h
            .sim
            .slab
            .as_ref()
            .ok_or_else(|| (RingshearStatus::InvalidArgument, "no step has been solved yet".to_string()))?;
        write_vtk_snapshot(&h.sim.mesh, slab, &h.sim.activity, &h.sim.flow, h.last_update, path).map_err(fail)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sim` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ringshear_sim_free(sim: *mut RingshearSim) {
    if !sim.is_null() {
        // SAFETY: the handle came from `Box::into_raw` and is freed once.
        drop(unsafe { Box::from_raw(sim) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn last_error() -> String {
        // SAFETY: the pointer refers to this thread's live message.
        unsafe { CStr::from_ptr(ringshear_last_error()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn couette_step_through_the_c_interface() {
        let mut sim = ptr::null_mut();
        unsafe {
            assert_eq!(ringshear_sim_new_couette(&mut sim), RingshearStatus::Ok);
            let mut n = 0;
            assert_eq!(ringshear_sim_node_count(sim, &mut n), RingshearStatus::Ok);
            assert_eq!(n, 3385);
            let mut r = RingshearStepReport::default();
            assert_eq!(ringshear_sim_step(sim, &mut r), RingshearStatus::Ok);
            assert_eq!(r.step, 1);
            assert!(r.converged && !r.did_connectivity_update);
            assert!(r.max_rel_error < 1e-10);
            let mut t = 0.0;
            assert_eq!(ringshear_sim_time(sim, &mut t), RingshearStatus::Ok);
            assert!((t - 0.2).abs() < 1e-15);

            let mut buf = vec![0.0; 2 * n];
            assert_eq!(ringshear_sim_copy_velocity(sim, buf.as_mut_ptr(), 3), RingshearStatus::InvalidArgument);
            assert!(last_error().contains("buffer"));
            assert_eq!(ringshear_sim_copy_velocity(sim, buf.as_mut_ptr(), buf.len()), RingshearStatus::Ok);
            let top = buf.chunks(2).map(|c| c[0]).fold(0.0f64, f64::max);
            assert!((top - 0.02).abs() < 1e-12);

            let dir = tempfile::tempdir().unwrap();
            let path = CString::new(dir.path().join("s.vtk").to_str().unwrap()).unwrap();
            assert_eq!(ringshear_sim_write_vtk(sim, path.as_ptr()), RingshearStatus::Ok);
            assert!(dir.path().join("s.vtk").exists());
            ringshear_sim_free(sim);
        }
    }

    #[test]
    fn errors_are_reported_with_codes() {
        unsafe {
            assert_eq!(ringshear_sim_new_couette(ptr::null_mut()), RingshearStatus::NullPointer);
            let mut sim = ptr::null_mut();
            assert_eq!(ringshear_sim_new_packaging(2.0, &mut sim), RingshearStatus::Config);
            assert!(last_error().contains("scale"));
            assert!(sim.is_null());
            let missing = CString::new("/nonexistent/run.cfg").unwrap();
            assert_eq!(ringshear_sim_new_from_config(missing.as_ptr(), &mut sim), RingshearStatus::Io);
            assert_eq!(ringshear_sim_step(ptr::null_mut(), ptr::null_mut()), RingshearStatus::NullPointer);
            ringshear_sim_free(ptr::null_mut());
        }
    }

    #[test]
    fn config_file_constructs_a_case() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "case = couette\nsteps = 2\n").unwrap();
        let path = CString::new(cfg.to_str().unwrap()).unwrap();
        let mut sim = ptr::null_mut();
        unsafe {
            assert_eq!(ringshear_sim_new_from_config(path.as_ptr(), &mut sim), RingshearStatus::Ok);
            let empty = CString::new(dir.path().join("nope.vtk").to_str().unwrap()).unwrap();
            assert_eq!(ringshear_sim_write_vtk(sim, empty.as_ptr()), RingshearStatus::InvalidArgument);
            ringshear_sim_free(sim);
        }
    }

    #[test]
    fn header_compiles_as_c() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("probe.c");
        std::fs::write(
            &src,
            "#include \"ringshear.h\"\n\
             int probe(void) {\n\
               RingshearSim *sim = 0;\n\
               RingshearStepReport r;\n\
               if (ringshear_sim_new_couette(&sim) != RINGSHEAR_STATUS_OK) return 1;\n\
               ringshear_sim_step(sim, &r);\n\
               ringshear_sim_free(sim);\n\
               return (int)r.step;\n\
             }\n",
        )
        .unwrap();
        let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
        let status = std::process::Command::new("cc")
            .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include])
            .arg(&src)
            .status();
        match status {
            Ok(s) => assert!(s.success(), "header does not compile"),
            Err(e) => eprintln!("skipping: no C compiler ({e})"),
        }
    }

    #[test]
    fn header_declares_the_interface() {
        let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/ringshear.h")).unwrap();
        for name in [
            "typedef struct RingshearSim RingshearSim",
            "ringshear_sim_new_couette",
            "ringshear_sim_step",
            "ringshear_sim_copy_velocity",
            "ringshear_last_error",
            "RingshearStepReport",
        ] {
            assert!(header.contains(name), "missing {name}");
        }
    }
}
