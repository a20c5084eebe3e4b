use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::{FeScalarField, FeVectorField};
use crate::mesh::TriMesh;

/// Named point data attached to one snapshot.
#[derive(Debug, Default)]
pub struct VtkFields<'a> {
    pub scalars: Vec<(&'a str, &'a FeScalarField)>,
    pub vectors: Vec<(&'a str, &'a FeVectorField)>,
}

/// Legacy ASCII unstructured grid; values with 17 significant digits.
pub fn write_vtk(path: impl AsRef<Path>, mesh: &TriMesh, fields: &VtkFields<'_>, title: &str) -> Result<()> {
    let nv = mesh.num_vertices();
    for (name, f) in &fields.scalars {
        check_name(name)?;
        if f.len() != nv {
            return Err(Error::DimensionMismatch { expected: nv, found: f.len() });
        }
    }
    for (name, f) in &fields.vectors {
        check_name(name)?;
        if f.values().len() != 2 * nv {
            return Err(Error::DimensionMismatch { expected: 2 * nv, found: f.values().len() });
        }
    }
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    // the title line must not contain a newline
    let _ = writeln!(out, "{}", title.replace('\n', " "));
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {nv} double");
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:.16e} {:.16e} 0", p[0], p[1]);
    }
    let nt = mesh.num_triangles();
    let _ = writeln!(out, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        out.push_str("5\n");
    }
    if !fields.scalars.is_empty() || !fields.vectors.is_empty() {
        let _ = writeln!(out, "POINT_DATA {nv}");
    }
    for (name, f) in &fields.scalars {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in f.values() {
            let _ = writeln!(out, "{v:.16e}");
        }
    }
    for (name, f) in &fields.vectors {
        let _ = writeln!(out, "VECTORS {name} double");
        for c in f.values().chunks(2) {
            let _ = writeln!(out, "{:.16e} {:.16e} 0", c[0], c[1]);
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        Err(Error::InvalidArgument(format!("invalid VTK array name `{name}`")))
    } else {
        Ok(())
    }
}
