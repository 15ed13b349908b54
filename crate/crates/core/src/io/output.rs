use std::fmt::Write as _;
use std::path::Path;

use crate::assembly::FlowField;
use crate::mesh::{Mesh2D, Shape, SpaceTimeSlab};
use crate::solver::StepReport;
use crate::vring::ActivityState;
use crate::{Error, Result};

/// Legacy unstructured-grid text of the active elements at the slab's upper
/// level. Point data: velocity (z = 0) and pressure. Cell data: block id and
/// whether the cell's connectivity was changed by this step's slip.
pub fn format_vtk_snapshot(
    mesh: &Mesh2D,
    slab: &SpaceTimeSlab,
    activity: &ActivityState,
    flow: &FlowField,
    did_update: bool,
) -> String {
    let cells: Vec<usize> = (0..mesh.element_count()).filter(|&e| activity.elem_active[e]).collect();
    let mut local = vec![usize::MAX; mesh.node_count()];
    let mut points = Vec::new();
    for &e in &cells {
        for &n in &mesh.elements[e].nodes {
            if local[n] == usize::MAX {
                local[n] = points.len();
                points.push(n);
            }
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\nringshear t={:?}\nASCII\nDATASET UNSTRUCTURED_GRID", slab.t_upper);
    let _ = writeln!(s, "POINTS {} double", points.len());
    for &n in &points {
        let p = slab.upper_coords[n];
        let _ = writeln!(s, "{:?} {:?} 0", p[0], p[1]);
    }
    let size: usize = cells.iter().map(|&e| mesh.elements[e].nodes.len() + 1).sum();
    let _ = writeln!(s, "CELLS {} {size}", cells.len());
    for &e in &cells {
        let nodes = &mesh.elements[e].nodes;
        let ids: Vec<String> = nodes.iter().map(|&n| local[n].to_string()).collect();
        let _ = writeln!(s, "{} {}", nodes.len(), ids.join(" "));
    }
    let _ = writeln!(s, "CELL_TYPES {}", cells.len());
    for &e in &cells {
        let _ = writeln!(s, "{}", match mesh.elements[e].shape {
            Shape::Tri3 => 5,
            Shape::Quad4 => 9,
        });
    }
    let _ = writeln!(s, "CELL_DATA {}\nSCALARS block_id int 1\nLOOKUP_TABLE default", cells.len());
    for &e in &cells {
        let _ = writeln!(s, "{}", mesh.elements[e].block_id);
    }
    let _ = writeln!(s, "SCALARS was_updated int 1\nLOOKUP_TABLE default");
    for &e in &cells {
        let _ = writeln!(s, "{}", (did_update && mesh.elements[e].is_update_layer) as u8);
    }
    let _ = writeln!(s, "POINT_DATA {}\nVECTORS velocity double", points.len());
    for &n in &points {
        let u = flow.u_upper[n];
        let _ = writeln!(s, "{:?} {:?} 0", u[0], u[1]);
    }
    let _ = writeln!(s, "SCALARS pressure double 1\nLOOKUP_TABLE default");
    for &n in &points {
        let _ = writeln!(s, "{:?}", flow.p_upper[n]);
    }
    s
}

pub fn write_vtk_snapshot(
    mesh: &Mesh2D,
    slab: &SpaceTimeSlab,
    activity: &ActivityState,
    flow: &FlowField,
    did_update: bool,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_vtk_snapshot(mesh, slab, activity, flow, did_update)).map_err(|e| Error::io(path, e))
}

/// Error series with columns `step,time,max_rel_error,did_update,newton_iters`.
/// The error column is empty for cases without an analytic solution.
pub fn write_error_csv(records: &[StepReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Structural(format!("csv: {other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["step", "time", "max_rel_error", "did_update", "newton_iters"]).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.step.to_string(),
            format!("{:?}", r.time),
            r.max_rel_error.map_or(String::new(), |e| format!("{e:e}")),
            r.did_connectivity_update.to_string(),
            r.newton_iters.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
