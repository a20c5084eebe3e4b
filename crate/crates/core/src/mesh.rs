//! Two-dimensional conforming triangulations.
//!
//! A [`TriMesh`] is immutable once built. Construction validates connectivity,
//! normalizes every triangle to counterclockwise orientation and caches the
//! per-element data needed by P1 assembly: the area and the three constant
//! gradients of the barycentric (hat) functions.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Cosine slack for the right-angle test; 90° + 1e-12 rad is accepted.
const NONOBTUSE_SLACK: f64 = 1e-12;

/// Area and hat-function gradients of one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub gradients: [[f64; 2]; 3],
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    geometry: Vec<ElementGeometry>,
    h: f64,
    nonobtuse: bool,
}

impl PartialEq for TriMesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.triangles == other.triangles
    }
}

impl TriMesh {
    /// Builds a mesh from raw data, reorienting clockwise triangles.
    pub fn new(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        Self::build(vertices, triangles).map_err(|(t, msg)| match t {
            Some(t) => Error::InvalidMesh(format!("triangle {t}: {msg}")),
            None => Error::InvalidMesh(msg),
        })
    }

    /// Uniform `n`×`n` grid on [0,1]², every cell cut by its rising diagonal
    /// into two right triangles.
    pub fn unit_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "unit square mesh needs n >= 1 subdivisions".into(),
            ));
        }
        let np = n + 1;
        let inv = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                vertices.push([i as f64 * inv, j as f64 * inv]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = j * np + i;
                let v10 = v00 + 1;
                let v01 = v00 + np;
                let v11 = v01 + 1;
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Self::new(vertices, triangles)
    }

    fn build(
        vertices: Vec<[f64; 2]>,
        mut triangles: Vec<[usize; 3]>,
    ) -> std::result::Result<Self, (Option<usize>, String)> {
        let nv = vertices.len();
        if vertices.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err((None, "vertex coordinates must be finite".into()));
        }
        if triangles.is_empty() {
            return Err((None, "mesh has no triangles".into()));
        }
        let mut geometry = Vec::with_capacity(triangles.len());
        let mut h: f64 = 0.0;
        let mut nonobtuse = true;
        for (t, tri) in triangles.iter_mut().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&k| k >= nv) {
                return Err((
                    Some(t),
                    format!("vertex index {bad} out of range (mesh has {nv} vertices)"),
                ));
            }
            let [a, b, c] = tri.map(|k| vertices[k]);
            let longest = edge_len(a, b).max(edge_len(b, c)).max(edge_len(c, a));
            let twice_area = signed_twice_area(a, b, c);
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]
                || twice_area.abs() <= 1e-14 * longest * longest
            {
                return Err((Some(t), "triangle has zero area".into()));
            }
            if twice_area < 0.0 {
                tri.swap(1, 2);
            }
            let g = compute_geometry(tri.map(|k| vertices[k]));
            h = h.max(longest);
            nonobtuse &= is_nonobtuse(tri.map(|k| vertices[k]));
            geometry.push(g);
        }

        // Each undirected edge borders at most two triangles, traversed in
        // opposite directions once everything is counterclockwise.
        let mut edges: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (p, q) = (tri[k], tri[(k + 1) % 3]);
                let entry = edges.entry((p.min(q), p.max(q))).or_insert((0, 0));
                if p < q {
                    entry.0 += 1;
                } else {
                    entry.1 += 1;
                }
                if entry.0 > 1 || entry.1 > 1 {
                    return Err((
                        Some(t),
                        format!("edge ({p}, {q}) is shared inconsistently (non-conforming or overlapping)"),
                    ));
                }
            }
        }

        Ok(Self {
            vertices,
            triangles,
            geometry,
            h,
            nonobtuse,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex(&self, j: usize) -> [f64; 2] {
        self.vertices[j]
    }

    pub fn triangle(&self, e: usize) -> [usize; 3] {
        self.triangles[e]
    }

    /// Largest triangle diameter (longest edge).
    pub fn h(&self) -> f64 {
        self.h
    }

    /// True when no triangle has an angle above 90°.
    pub fn is_nonobtuse(&self) -> bool {
        self.nonobtuse
    }

    pub fn element_geometry(&self, e: usize) -> Result<ElementGeometry> {
        self.geometry.get(e).copied().ok_or(Error::OutOfRange {
            index: e,
            len: self.geometry.len(),
        })
    }

    pub(crate) fn geometry(&self, e: usize) -> &ElementGeometry {
        &self.geometry[e]
    }

    pub fn total_area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    /// Barycentric coordinates of `p` with respect to triangle `e`.
    pub fn barycentric(&self, e: usize, p: [f64; 2]) -> [f64; 3] {
        let tri = self.triangles[e];
        let x0 = self.vertices[tri[0]];
        let g = &self.geometry[e].gradients;
        let d = [p[0] - x0[0], p[1] - x0[1]];
        let b1 = g[1][0] * d[0] + g[1][1] * d[1];
        let b2 = g[2][0] * d[0] + g[2][1] * d[1];
        [1.0 - b1 - b2, b1, b2]
    }

    /// Physical coordinates of a barycentric point in triangle `e`.
    pub fn point_at(&self, e: usize, bary: &[f64; 3]) -> [f64; 2] {
        let tri = self.triangles[e];
        let mut p = [0.0; 2];
        for k in 0..3 {
            let v = self.vertices[tri[k]];
            p[0] += bary[k] * v[0];
            p[1] += bary[k] * v[1];
        }
        p
    }

    /// Parses the plain-text mesh format: `nv nt`, then `nv` lines `x y`,
    /// then `nt` lines `i j k` with 0-based indices.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::MeshLoad {
            source_name: source_name.to_string(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or_else(|| err(1, "empty mesh file".into()))?;
        let counts = parse_fields::<usize>(header, 2).map_err(|m| err(hline, m))?;
        let (nv, nt) = (counts[0], counts[1]);

        let mut vertices = Vec::with_capacity(nv);
        for k in 0..nv {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| err(hline, format!("expected {nv} vertices, found {k}")))?;
            let xy = parse_fields::<f64>(l, 2).map_err(|m| err(ln, m))?;
            vertices.push([xy[0], xy[1]]);
        }
        let mut triangles = Vec::with_capacity(nt);
        let mut tri_lines = Vec::with_capacity(nt);
        for k in 0..nt {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| err(hline, format!("expected {nt} triangles, found {k}")))?;
            let ijk = parse_fields::<usize>(l, 3).map_err(|m| err(ln, m))?;
            triangles.push([ijk[0], ijk[1], ijk[2]]);
            tri_lines.push(ln);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(err(ln, "unexpected trailing content".into()));
        }
        Self::build(vertices, triangles).map_err(|(t, msg)| match t {
            Some(t) => err(tri_lines[t], msg),
            None => err(hline, msg),
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Serializes in the plain-text format; coordinates round-trip exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.num_vertices(), self.num_triangles());
        for v in &self.vertices {
            let _ = writeln!(out, "{:?} {:?}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn parse_fields<T: std::str::FromStr>(line: &str, count: usize) -> std::result::Result<Vec<T>, String> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != count {
        return Err(format!("expected {count} fields, found {}", parts.len()));
    }
    parts
        .iter()
        .map(|s| s.parse::<T>().map_err(|_| format!("cannot parse `{s}`")))
        .collect()
}

fn edge_len(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

fn signed_twice_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
}

fn compute_geometry(p: [[f64; 2]; 3]) -> ElementGeometry {
    let twice = signed_twice_area(p[0], p[1], p[2]);
    let inv = 1.0 / twice;
    let gradients = [
        [(p[1][1] - p[2][1]) * inv, (p[2][0] - p[1][0]) * inv],
        [(p[2][1] - p[0][1]) * inv, (p[0][0] - p[2][0]) * inv],
        [(p[0][1] - p[1][1]) * inv, (p[1][0] - p[0][0]) * inv],
    ];
    ElementGeometry {
        area: 0.5 * twice,
        gradients,
    }
}

fn is_nonobtuse(p: [[f64; 2]; 3]) -> bool {
    (0..3).all(|k| {
        let a = p[k];
        let b = p[(k + 1) % 3];
        let c = p[(k + 2) % 3];
        let u = [b[0] - a[0], b[1] - a[1]];
        let w = [c[0] - a[0], c[1] - a[1]];
        let cos = (u[0] * w[0] + u[1] * w[1]) / (u[0].hypot(u[1]) * w[0].hypot(w[1]));
        cos >= -NONOBTUSE_SLACK
    })
}

/// Bucket grid for locating points in a mesh.
pub struct PointLocator<'a> {
    mesh: &'a TriMesh,
    origin: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in mesh.vertices() {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        let side = ((mesh.num_triangles() as f64).sqrt().ceil() as usize).max(1);
        let dims = [side, side];
        let cell = [
            ((hi[0] - lo[0]) / side as f64).max(f64::MIN_POSITIVE),
            ((hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE),
        ];
        let mut loc = Self {
            mesh,
            origin: lo,
            cell,
            dims,
            buckets: vec![Vec::new(); side * side],
        };
        for (e, tri) in mesh.triangles().iter().enumerate() {
            let mut tlo = [f64::INFINITY; 2];
            let mut thi = [f64::NEG_INFINITY; 2];
            for &k in tri {
                let v = mesh.vertex(k);
                for d in 0..2 {
                    tlo[d] = tlo[d].min(v[d]);
                    thi[d] = thi[d].max(v[d]);
                }
            }
            let (i0, j0) = loc.bucket_of(tlo);
            let (i1, j1) = loc.bucket_of(thi);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.buckets[j * dims[0] + i].push(e);
                }
            }
        }
        loc
    }

    fn bucket_of(&self, p: [f64; 2]) -> (usize, usize) {
        let idx = |d: usize| {
            let t = ((p[d] - self.origin[d]) / self.cell[d]).floor();
            (t.max(0.0) as usize).min(self.dims[d] - 1)
        };
        (idx(0), idx(1))
    }

    /// Finds a triangle containing `p` (within a small tolerance) and the
    /// barycentric coordinates of `p` in it.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let (i, j) = self.bucket_of(p);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &e in &self.buckets[j * self.dims[0] + i] {
            let b = self.mesh.barycentric(e, p);
            let worst = b[0].min(b[1]).min(b[2]);
            if worst >= -1e-10 && best.as_ref().is_none_or(|(_, _, w)| worst > *w) {
                best = Some((e, b, worst));
            }
        }
        best.map(|(e, b, _)| (e, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_counts() {
        let m = TriMesh::unit_square(1).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles()), (4, 2));
        assert!((m.total_area() - 1.0).abs() < 1e-15);

        let m = TriMesh::unit_square(2).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles()), (9, 8));
        assert!((m.h() - 2f64.sqrt() / 2.0).abs() < 1e-15);

        let m = TriMesh::unit_square(50).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles()), (2601, 5000));
        assert!(m.is_nonobtuse());
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(matches!(TriMesh::unit_square(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn reference_triangle_geometry() {
        let m = TriMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let g = m.element_geometry(0).unwrap();
        assert_eq!(g.area, 0.5);
        assert_eq!(g.gradients, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(m.element_geometry(1).is_err());
    }

    #[test]
    fn scaling_a_triangle() {
        let pts = [[0.1, 0.2], [0.7, 0.3], [0.2, 0.9]];
        let m1 = TriMesh::new(pts.to_vec(), vec![[0, 1, 2]]).unwrap();
        let m2 = TriMesh::new(pts.iter().map(|p| [2.0 * p[0], 2.0 * p[1]]).collect(), vec![[0, 1, 2]]).unwrap();
        let (g1, g2) = (m1.element_geometry(0).unwrap(), m2.element_geometry(0).unwrap());
        assert!((g2.area - 4.0 * g1.area).abs() < 1e-14);
        for k in 0..3 {
            for d in 0..2 {
                assert!((g2.gradients[k][d] - 0.5 * g1.gradients[k][d]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let m = TriMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 2, 1]]).unwrap();
        assert_eq!(m.triangle(0), [0, 1, 2]);
        assert!(m.element_geometry(0).unwrap().area > 0.0);
    }

    #[test]
    fn degenerate_and_out_of_range_triangles() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(TriMesh::new(v.clone(), vec![[0, 1, 1]]).is_err());
        assert!(TriMesh::new(v, vec![[0, 1, 3]]).is_err());
    }

    #[test]
    fn parse_reports_line_numbers() {
        let text = "3 1\n0 0\n1 0\n0 1\n0 1 1\n";
        match TriMesh::parse(text, "bad.mesh") {
            Err(Error::MeshLoad { line, msg, .. }) => {
                assert_eq!(line, 5);
                assert!(msg.contains("zero area"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
        match TriMesh::parse("3 1\n0 0\n1 zero\n", "bad.mesh") {
            Err(Error::MeshLoad { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match TriMesh::parse("3 1\n0 0\n1 0\n0 1\n0 1 7\n", "bad.mesh") {
            Err(Error::MeshLoad { line, msg, .. }) => {
                assert_eq!(line, 5);
                assert!(msg.contains("out of range"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn text_round_trip() {
        let m = TriMesh::unit_square(1).unwrap();
        let text = m.to_text();
        assert_eq!(text.lines().count(), 1 + 4 + 2);
        assert_eq!(TriMesh::parse(&text, "mem").unwrap(), m);
        let m = TriMesh::unit_square(7).unwrap();
        assert_eq!(TriMesh::parse(&m.to_text(), "mem").unwrap(), m);
    }

    #[test]
    fn overlapping_triangles_rejected() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        assert!(TriMesh::new(v, vec![[0, 1, 2], [0, 1, 3]]).is_err());
    }

    #[test]
    fn obtuse_triangle_flagged() {
        let m = TriMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.1]], vec![[0, 1, 2]]).unwrap();
        assert!(!m.is_nonobtuse());
    }

    #[test]
    fn locator_finds_points() {
        let m = TriMesh::unit_square(5).unwrap();
        let loc = PointLocator::new(&m);
        for p in [[0.0, 0.0], [1.0, 1.0], [0.33, 0.71], [0.5, 0.5], [0.999, 0.001]] {
            let (e, b) = loc.locate(p).unwrap();
            let q = m.point_at(e, &b);
            assert!((q[0] - p[0]).abs() < 1e-14 && (q[1] - p[1]).abs() < 1e-14);
        }
        assert!(loc.locate([1.5, 0.5]).is_none());
    }
}
