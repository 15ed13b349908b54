use std::sync::Arc;

use super::Case;
use crate::assembly::{vector_fn, BCSet, MaterialParams};
use crate::mesh::{linspace, structured_grid, Side, STATIC_BLOCK};
use crate::vring::{build_ring, LayerPair, LayerSpec, MotionProgram, GAMMA_IN, GAMMA_OUT};
use crate::{Error, Result};

const LAYER_M: &str = "layer_m";
const LAYER_S: &str = "layer_s";

/// Couette channel: static lower plate, moving upper plate, with the moving
/// block attached to the top plate above an update layer.
#[derive(Debug, Clone, PartialEq)]
pub struct CouetteParams {
    pub plate_speed: f64,
    pub rho: f64,
    pub mu: f64,
    pub length: f64,
    /// Height of the static portion.
    pub h_static: f64,
    pub h_layer: f64,
    /// Height of the moving portion.
    pub h_moving: f64,
    pub spacing: f64,
    pub dt: f64,
    pub delta: Option<f64>,
}

impl Default for CouetteParams {
    fn default() -> Self {
        CouetteParams {
            plate_speed: 0.02,
            rho: 100.0,
            mu: 2.5,
            length: 1.0,
            h_static: 0.68,
            h_layer: 0.02,
            h_moving: 0.3,
            spacing: 0.02,
            dt: 0.2,
            delta: Some(0.02),
        }
    }
}

impl CouetteParams {
    pub fn height(&self) -> f64 {
        self.h_static + self.h_layer + self.h_moving
    }
}

fn cells(extent: f64, h: f64) -> Result<usize> {
    let n = (extent / h).round();
    if !(n >= 1.0) || ((n * h - extent).abs() > 1e-9 * extent) {
        return Err(Error::Config(format!("extent {extent} is not a multiple of spacing {h}")));
    }
    Ok(n as usize)
}

pub fn generate_couette_case(p: &CouetteParams) -> Result<Case> {
    let nx = cells(p.length, p.spacing)?;
    let ny_s = cells(p.h_static, p.spacing)?;
    let ny_m = cells(p.h_moving, p.spacing)?;
    let xs = linspace(0.0, p.length, nx);
    let y_top = p.height();
    let y_block = p.h_static + p.h_layer;

    let static_mesh = structured_grid(&xs, &linspace(0.0, p.h_static, ny_s), STATIC_BLOCK, false, |_, _| true, |_, _, s| {
        Some(match s {
            Side::Bottom => "bottom",
            Side::Top => LAYER_S,
            Side::Left => GAMMA_IN,
            Side::Right => GAMMA_OUT,
        }
        .to_string())
    });
    let block = structured_grid(&xs, &linspace(y_block, y_top, ny_m), 1, false, |_, _| true, |_, _, s| {
        Some(match s {
            Side::Bottom => LAYER_M,
            Side::Top => "top",
            Side::Left => GAMMA_IN,
            Side::Right => GAMMA_OUT,
        }
        .to_string())
    });
    let spec = LayerSpec {
        layers: vec![LayerPair { gamma_m: LAYER_M.into(), gamma_s: LAYER_S.into() }],
        direction: [1.0, 0.0],
        delta: p.delta,
        structured: true,
    };
    let (mesh, ring) = build_ring(&static_mesh, &block, 1, &spec)?;

    let (ub, h) = (p.plate_speed, y_top);
    let exact = vector_fn(move |x, _| [ub * x[1] / h, 0.0]);
    let zero = vector_fn(|_, _| [0.0, 0.0]);
    let bcs = BCSet {
        dirichlet: vec![
            ("top".into(), vector_fn(move |_, _| [ub, 0.0])),
            ("bottom".into(), zero),
            (GAMMA_IN.into(), exact.clone()),
            (GAMMA_OUT.into(), exact.clone()),
        ],
        neumann: Vec::new(),
        pressure_pin: Some((0, 0.0)),
    };
    Ok(Case {
        name: "couette".into(),
        mesh,
        ring: Some(ring),
        bcs,
        params: MaterialParams::new(p.rho, p.mu)?,
        motion: MotionProgram::Constant(ub),
        initial: Arc::new(move |x| ([ub * x[1] / h, 0.0], 0.0)),
        exact: Some(exact),
        reference_speed: ub,
        dt: p.dt,
        t0: 0.0,
    })
}
