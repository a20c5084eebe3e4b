//! File formats, configuration and the command-line binary.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use haptofem::config::{parse_config, RawConfig};
use haptofem::io::{write_errors, write_minima, write_vtk, VtkFields};
use haptofem::verification::{ErrorTable, MinimaSeries};
use haptofem::{Error, FeScalarField, FeVectorField, SchemeKind, TriMesh};

const BIN: &str = env!("CARGO_BIN_EXE_haptofem");

/// Point count, cell count and named point arrays of a legacy ASCII file.
struct Vtk {
    points: usize,
    cells: usize,
    arrays: BTreeMap<String, Vec<f64>>,
}

fn read_vtk(path: &Path) -> Vtk {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# vtk DataFile Version 3.0"));
    let mut vtk = Vtk { points: 0, cells: 0, arrays: BTreeMap::new() };
    let mut current: Option<(String, usize)> = None;
    for line in lines {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.first().copied() {
            Some("POINTS") => vtk.points = words[1].parse().unwrap(),
            Some("CELLS") => vtk.cells = words[1].parse().unwrap(),
            Some("SCALARS") => current = Some((words[1].to_string(), 1)),
            Some("VECTORS") => current = Some((words[1].to_string(), 3)),
            Some("LOOKUP_TABLE") | Some("POINT_DATA") => {}
            _ => {
                if let Some((name, width)) = &current {
                    let vals: Vec<f64> = words.iter().map(|w| w.parse().unwrap()).collect();
                    assert_eq!(vals.len(), *width);
                    let take = if *width == 3 { 2 } else { 1 };
                    vtk.arrays.entry(name.clone()).or_default().extend(&vals[..take]);
                }
            }
        }
    }
    vtk
}

#[test]
fn config_examples() {
    let c = parse_config(&RawConfig::default(), None).unwrap();
    assert_eq!((c.scheme, c.n, c.dt, c.t_end), (SchemeKind::UvmSigma, 50, 0.01, 15.0));
    assert_eq!(c.snapshots, vec![1.0, 5.0, 10.0, 15.0]);

    let mut flags = RawConfig::default();
    flags.set("scheme", "uvms").unwrap();
    flags.set("mu-u", "2").unwrap();
    let c = parse_config(&flags, None).unwrap();
    assert_eq!((c.scheme, c.mu_u), (SchemeKind::Uvms, 2.0));

    flags.set("dt", "0").unwrap();
    match parse_config(&flags, None) {
        Err(Error::Config { key, .. }) => assert_eq!(key, "dt"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn vtk_unit_field_on_two_triangles() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = Arc::new(TriMesh::unit_square(1).unwrap());
    let one = FeScalarField::constant(mesh.clone(), 1.0);
    let mut fields = VtkFields::default();
    fields.scalars.push(("u", &one));
    let path = dir.path().join("one.vtk");
    write_vtk(&path, &mesh, &fields, "unit").unwrap();
    let vtk = read_vtk(&path);
    assert_eq!((vtk.points, vtk.cells), (4, 2));
    assert_eq!(vtk.arrays["u"], vec![1.0; 4]);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().filter(|l| *l == "5").count(), 2);
}

#[test]
fn vtk_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = Arc::new(TriMesh::unit_square(7).unwrap());
    let u = FeScalarField::interpolate(mesh.clone(), |x, y| (x * 31.0).sin() * (y + 1e-9).ln() / 3.0).unwrap();
    let v = FeScalarField::interpolate(mesh.clone(), |x, y| 1.0 / (1.0 + x * y) - 1e-300).unwrap();
    let sigma = FeVectorField::interpolate(mesh.clone(), |x, y| [x.exp() * 1e-7, -y.powi(3) * 1e12]).unwrap();
    let mut fields = VtkFields::default();
    fields.scalars.push(("u", &u));
    fields.scalars.push(("v", &v));
    fields.vectors.push(("sigma", &sigma));
    let path = dir.path().join("f.vtk");
    write_vtk(&path, &mesh, &fields, "round trip").unwrap();
    let vtk = read_vtk(&path);
    assert_eq!(vtk.points, mesh.num_vertices());
    assert_eq!(vtk.cells, mesh.num_triangles());
    assert_eq!(vtk.arrays["u"], u.values());
    assert_eq!(vtk.arrays["v"], v.values());
    assert_eq!(vtk.arrays["sigma"], sigma.values());
}

#[test]
fn mesh_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m1.txt");
    let m1 = TriMesh::unit_square(1).unwrap();
    m1.write(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 + 2);
    assert_eq!(text.lines().next(), Some("4 2"));

    let mesh = TriMesh::unit_square(9).unwrap();
    mesh.write(&path).unwrap();
    let back = TriMesh::read(&path).unwrap();
    assert_eq!(back.vertices(), mesh.vertices());
    assert_eq!(back.triangles(), mesh.triangles());
}

#[test]
fn empty_tables_are_header_only() {
    let dir = tempfile::tempdir().unwrap();
    write_minima(dir.path().join("m.csv"), &MinimaSeries::default()).unwrap();
    write_errors(dir.path().join("e.csv"), &ErrorTable::default()).unwrap();
    assert_eq!(std::fs::read_to_string(dir.path().join("m.csv")).unwrap(), "step,time,min_u,min_v,min_m\n");
    assert_eq!(
        std::fs::read_to_string(dir.path().join("e.csv")).unwrap(),
        "level,n,h,dt,e_u_L2,e_v_L2,e_m_L2,e_sigma_L2,e_u_H1,e_m_H1,order_u,order_v,order_m,order_sigma\n"
    );
}

#[test]
fn binary_mesh_gen_writes_a_readable_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mesh.txt");
    let out = Command::new(BIN).args(["mesh-gen", "--n", "3", "--out"]).arg(&path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mesh = TriMesh::read(&path).unwrap();
    assert_eq!((mesh.num_vertices(), mesh.num_triangles()), (16, 18));
}

#[test]
fn binary_run_from_config_file_and_mesh_file() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("mesh.txt");
    TriMesh::unit_square(6).unwrap().write(&mesh).unwrap();
    let cfg = dir.path().join("run.cfg");
    let out_dir = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!(
            "scheme = uvms\nproblem = test2\nmu_u = 2\ndt = 0.05\nt_end = 0.2\nsnapshots = 0.1, 0.2\nmesh_file = {}\nout = {}\n",
            mesh.display(),
            out_dir.display()
        ),
    )
    .unwrap();
    let out = Command::new(BIN).args(["run", "--config"]).arg(&cfg).args(["--jacobi"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let minima = std::fs::read_to_string(out_dir.join("minima.csv")).unwrap();
    assert!(minima.starts_with("step,time,min_u,min_v,min_m,min_s\n"));
    assert_eq!(minima.lines().count(), 1 + 5);
    let vtk = read_vtk(&out_dir.join("snapshot_000004.vtk"));
    assert_eq!(vtk.points, 49);
    assert!(vtk.arrays.contains_key("s") && !vtk.arrays.contains_key("sigma"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["jacobi"], true);
    assert_eq!(manifest["snapshots"][0]["step"], 2);
}

#[test]
fn binary_reports_bad_values_and_fails() {
    let out = Command::new(BIN).args(["run", "--dt", "0"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));
    let out = Command::new(BIN).args(["run", "--n", "x"]).output().unwrap();
    assert!(!out.status.success());
}
