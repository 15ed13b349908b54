use std::path::{Path, PathBuf};

use ringshear::cases::{generate_couette_case, CouetteParams};
use ringshear::io::{format_mesh, parse_config, parse_mesh, read_mesh, run_config, write_mesh, ConfigOverrides};
use ringshear::Error;

#[test]
fn couette_mesh_roundtrips_through_the_file_format() {
    let case = generate_couette_case(&CouetteParams::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("couette.msh");
    write_mesh(&case.mesh, case.ring.as_ref(), &path).unwrap();
    let (mesh, ring) = read_mesh(&path).unwrap();
    assert_eq!(mesh, case.mesh);
    assert_eq!(ring, case.ring);
}

#[test]
fn ring_delta_beyond_the_element_extent_is_rejected() {
    let case = generate_couette_case(&CouetteParams::default()).unwrap();
    let text = format_mesh(&case.mesh, case.ring.as_ref());
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let at = lines.iter().position(|l| l == "$Ring").unwrap() + 2;
    let mut fields: Vec<String> = lines[at].split_whitespace().map(String::from).collect();
    fields[4] = "0.5".into();
    lines[at] = fields.join(" ");
    let err = parse_mesh(&lines.join("\n"), Path::new("edited.msh")).unwrap_err();
    assert!(matches!(err, Error::Constraint(_)), "{err}");
}

fn run_couette(out: PathBuf) -> Vec<ringshear::solver::StepReport> {
    let o = ConfigOverrides {
        case: Some("couette".into()),
        steps: Some(8),
        out: Some(out),
        write_every: Some(2),
        check_invariants: true,
        ..Default::default()
    };
    run_config(&parse_config(None, &o).unwrap(), |_, _| {}).unwrap()
}

#[test]
fn couette_run_writes_snapshots_and_error_series() {
    let dir = tempfile::tempdir().unwrap();
    let reports = run_couette(dir.path().to_path_buf());

    let (mesh, _) = read_mesh(dir.path().join("mesh.msh")).unwrap();
    assert_eq!(mesh.element_count(), 3250);

    for r in reports.iter().filter(|r| r.step % 2 == 0) {
        let vtk = std::fs::read_to_string(dir.path().join(format!("snapshot_{:05}.vtk", r.step))).unwrap();
        let cells = vtk.lines().find_map(|l| l.strip_prefix("CELLS ")).unwrap();
        let n: usize = cells.split_whitespace().next().unwrap().parse().unwrap();
        assert_eq!(n, r.n_active_elems);
        let updated = vtk.lines().skip_while(|l| !l.starts_with("SCALARS was_updated")).skip(2).take(n);
        let any = updated.map(|l| l.trim() == "1").fold(false, |a, b| a | b);
        assert_eq!(any, r.did_connectivity_update, "step {}", r.step);
    }
    assert!(!dir.path().join("snapshot_00001.vtk").exists());

    let mut rdr = csv::Reader::from_path(dir.path().join("errors.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["step", "time", "max_rel_error", "did_update", "newton_iters"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 8);
    for row in &rows {
        let step: usize = row[0].parse().unwrap();
        assert_eq!(&row[3] == "true", step == 6, "step {step}");
        let err: f64 = row[2].parse().unwrap();
        assert!(err <= 1e-10);
    }
}
