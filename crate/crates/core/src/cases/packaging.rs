use std::sync::Arc;

use super::Case;
use crate::assembly::{vector_fn, BCSet, MaterialParams};
use crate::mesh::{linspace, structured_grid, Mesh2D, Side, STATIC_BLOCK};
use crate::vring::{build_ring, LayerPair, LayerSpec, MotionProgram, GAMMA_IN, GAMMA_OUT};
use crate::{Error, Result};

/// Space-time element count of the full-resolution machine.
pub const PACKAGING_PAPER_ELEMENTS: usize = 154_970;

pub const CASING: &str = "casing";
pub const NOZZLE: &str = "nozzle";
pub const PACKAGE: &str = "package";

const PITCH: f64 = 0.1;
const LENGTH: f64 = 0.2;
const NOZZLE_MIN: f64 = 0.095;
const NOZZLE_MAX: f64 = 0.105;

#[derive(Debug, Clone, PartialEq)]
pub struct PackagingParams {
    pub package_speed: f64,
    /// Peak nozzle inflow speed.
    pub v_bar: f64,
    pub rho: f64,
    pub mu: f64,
    pub dt: f64,
    /// Resolution factor in (0, 1]; 1 approximates the full machine.
    pub scale: f64,
}

impl Default for PackagingParams {
    fn default() -> Self {
        PackagingParams { package_speed: 0.1, v_bar: 1.0, rho: 0.6924, mu: 271e-7, dt: 2e-3, scale: 0.05 }
    }
}

/// Vertical nozzle velocity; negative values point into the casing.
pub fn nozzle_profile(x: f64, v_bar: f64) -> f64 {
    v_bar * 40e3 * (x - NOZZLE_MIN) * (x - NOZZLE_MAX)
}

/// The casing spans `[0, 0.2]` with the nozzle on its top wall. Two blocks of
/// pitch 0.1 each carry one open-top package in a moving band between two
/// static casing strips. Element size is `0.005 / k` with `k` growing with the
/// square root of `scale`.
pub fn generate_packaging_case(p: &PackagingParams) -> Result<Case> {
    if !(p.scale > 0.0 && p.scale <= 1.0) {
        return Err(Error::Config(format!("scale must lie in (0, 1], got {}", p.scale)));
    }
    let k = (11.5 * p.scale.sqrt()).round() as usize;
    if k == 0 {
        return Err(Error::Structural(format!(
            "scale {} leaves packages spanning fewer than 2 elements",
            p.scale
        )));
    }
    let h = 0.005 / k as f64;
    let wall = ((k as f64 / 3.0).round() as usize).max(1);
    let nx = 40 * k;
    let (n_casing, n_band) = (2 * k, 7 * k);
    let y = |cells: usize| cells as f64 * h;
    let xs = linspace(0.0, LENGTH, nx);
    let (nz0, nz1) = (19 * k, 21 * k);

    let lower = structured_grid(&xs, &linspace(0.0, y(n_casing), n_casing), STATIC_BLOCK, true, |_, _| true, |_, _, s| {
        Some(match s {
            Side::Bottom => CASING,
            Side::Top => "layer_s_lo",
            Side::Left => GAMMA_IN,
            Side::Right => GAMMA_OUT,
        }
        .to_string())
    });
    let y_up = y(n_casing + 1 + n_band + 1);
    let upper = structured_grid(&xs, &linspace(y_up, y_up + y(n_casing), n_casing), STATIC_BLOCK, true, |_, _| true, |i, _, s| {
        Some(match s {
            Side::Top if (nz0..nz1).contains(&i) => NOZZLE,
            Side::Top => CASING,
            Side::Bottom => "layer_s_hi",
            Side::Left => GAMMA_IN,
            Side::Right => GAMMA_OUT,
        }
        .to_string())
    });
    let mut static_mesh = lower;
    append(&mut static_mesh, &upper);

    // open-top box occupying cells [5k, 15k) x [k, 6k) of the block
    let (bx0, bx1, by0, by1) = (5 * k, 15 * k, k, 6 * k);
    let solid = |i: usize, j: usize| {
        let inside = (bx0..bx1).contains(&i) && (by0..by1).contains(&j);
        inside && (i < bx0 + wall || i >= bx1 - wall || j < by0 + wall)
    };
    let y_band = y(n_casing + 1);
    let block = structured_grid(
        &linspace(0.0, PITCH, 20 * k),
        &linspace(y_band, y_band + y(n_band), n_band),
        1,
        true,
        |i, j| !solid(i, j),
        |i, j, s| {
            let outer = match s {
                Side::Bottom => j == 0,
                Side::Top => j + 1 == n_band,
                Side::Left => i == 0,
                Side::Right => i + 1 == 20 * k,
            };
            Some(if !outer { PACKAGE } else {
                match s {
                    Side::Bottom => "layer_m_lo",
                    Side::Top => "layer_m_hi",
                    Side::Left => GAMMA_IN,
                    Side::Right => GAMMA_OUT,
                }
            }
            .to_string())
        },
    );
    let spec = LayerSpec {
        layers: vec![
            LayerPair { gamma_m: "layer_m_lo".into(), gamma_s: "layer_s_lo".into() },
            LayerPair { gamma_m: "layer_m_hi".into(), gamma_s: "layer_s_hi".into() },
        ],
        direction: [1.0, 0.0],
        delta: None,
        structured: true,
    };
    let (mesh, ring) = build_ring(&static_mesh, &block, 2, &spec)?;
    log::info!(
        "packaging mesh at scale {}: {} elements, {} nodes (full machine: {} elements)",
        p.scale,
        mesh.element_count(),
        mesh.node_count(),
        PACKAGING_PAPER_ELEMENTS
    );

    let (up, vb) = (p.package_speed, p.v_bar);
    let bcs = BCSet {
        dirichlet: vec![
            (PACKAGE.into(), vector_fn(move |_, _| [up, 0.0])),
            (NOZZLE.into(), vector_fn(move |x, _| [0.0, nozzle_profile(x[0], vb)])),
            (CASING.into(), vector_fn(|_, _| [0.0, 0.0])),
        ],
        neumann: Vec::new(),
        pressure_pin: None,
    };
    Ok(Case {
        name: "packaging".into(),
        mesh,
        ring: Some(ring),
        bcs,
        params: MaterialParams::new(p.rho, p.mu)?,
        motion: MotionProgram::Constant(up),
        initial: Arc::new(|_| ([0.0, 0.0], 0.0)),
        exact: None,
        reference_speed: vb,
        dt: p.dt,
        t0: 0.0,
    })
}

/// Appends `other` as a disjoint part of `mesh`.
fn append(mesh: &mut Mesh2D, other: &Mesh2D) {
    let (n0, e0) = (mesh.node_count(), mesh.element_count());
    mesh.node_coords.extend_from_slice(&other.node_coords);
    for e in &other.elements {
        let mut e = e.clone();
        e.nodes.iter_mut().for_each(|n| *n += n0);
        mesh.elements.push(e);
    }
    for f in &other.boundary_faces {
        let mut f = f.clone();
        f.element += e0;
        mesh.boundary_faces.push(f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nozzle_roots_and_peak() {
        assert_eq!(nozzle_profile(0.095, 1.0), 0.0);
        assert!(nozzle_profile(0.105, 1.0).abs() < 1e-15);
        assert!((nozzle_profile(0.1, 1.0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn desk_scale_mesh() {
        let c = generate_packaging_case(&PackagingParams::default()).unwrap();
        let ring = c.ring.as_ref().unwrap();
        assert_eq!(ring.update_layer_count(), 2);
        assert!((ring.ring_length - 0.3).abs() < 1e-12);
        assert!(c.mesh.boundary_faces.iter().any(|f| f.marker == NOZZLE));
        assert!(c.mesh.boundary_faces.iter().any(|f| f.marker == PACKAGE));
        assert!(c.mesh.element_count() > 5000);
    }

    #[test]
    fn rejects_bad_scale() {
        for s in [0.0, 1.5, 1e-4] {
            let p = PackagingParams { scale: s, ..Default::default() };
            assert!(generate_packaging_case(&p).is_err());
        }
    }
}
