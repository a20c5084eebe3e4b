use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Nodal values of a continuous P1 function.
#[derive(Debug, Clone)]
pub struct FeScalarField {
    mesh: Arc<TriMesh>,
    values: Vec<f64>,
}

impl PartialEq for FeScalarField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) && self.values == other.values
    }
}

impl FeScalarField {
    pub fn new(mesh: Arc<TriMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_vertices(),
                found: values.len(),
            });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("nodal value at vertex {j}")));
        }
        Ok(Self { mesh, values })
    }

    pub fn constant(mesh: Arc<TriMesh>, c: f64) -> Self {
        let n = mesh.num_vertices();
        Self { mesh, values: vec![c; n] }
    }

    pub fn zeros(mesh: Arc<TriMesh>) -> Self {
        Self::constant(mesh, 0.0)
    }

    /// Nodal interpolant I_h f.
    pub fn interpolate(mesh: Arc<TriMesh>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = mesh.vertices().iter().map(|p| f(p[0], p[1])).collect::<Vec<_>>();
        if let Some(j) = values.iter().position(|v| v.is_nan()) {
            let p = mesh.vertex(j);
            return Err(Error::NonFinite(format!("function is NaN at vertex {j} ({}, {})", p[0], p[1])));
        }
        Self::new(mesh, values)
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Nodewise map; fails if the map produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.mesh.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// I_h(max(f, 0))
    pub fn positive_part(&self) -> Self {
        Self { mesh: self.mesh.clone(), values: self.values.iter().map(|&v| v.max(0.0)).collect() }
    }

    /// I_h(min(f, 0))
    pub fn negative_part(&self) -> Self {
        Self { mesh: self.mesh.clone(), values: self.values.iter().map(|&v| v.min(0.0)).collect() }
    }

    pub fn same_mesh(&self, other: &FeScalarField) -> Result<()> {
        if Arc::ptr_eq(&self.mesh, &other.mesh) {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    /// Value at barycentric point `bary` of triangle `e`.
    #[inline]
    pub fn eval(&self, e: usize, bary: &[f64; 3]) -> f64 {
        let t = self.mesh.triangle(e);
        bary[0] * self.values[t[0]] + bary[1] * self.values[t[1]] + bary[2] * self.values[t[2]]
    }

    /// Constant gradient on triangle `e`.
    pub fn element_gradient(&self, e: usize) -> [f64; 2] {
        let t = self.mesh.triangle(e);
        let g = &self.mesh.geometry(e).gradients;
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += self.values[t[k]] * g[k][0];
            out[1] += self.values[t[k]] * g[k][1];
        }
        out
    }

    /// Element gradients for every triangle, one component.
    pub fn element_gradients(&self, component: usize) -> Vec<f64> {
        (0..self.mesh.num_triangles())
            .map(|e| self.element_gradient(e)[component])
            .collect()
    }

    pub fn sub(&self, other: &FeScalarField) -> Result<Self> {
        self.same_mesh(other)?;
        Ok(Self {
            mesh: self.mesh.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }
}

/// Nodal values of a P1 vector field, interleaved as `[x0, y0, x1, y1, ...]`.
#[derive(Debug, Clone)]
pub struct FeVectorField {
    mesh: Arc<TriMesh>,
    values: Vec<f64>,
}

impl PartialEq for FeVectorField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) && self.values == other.values
    }
}

impl FeVectorField {
    pub fn new(mesh: Arc<TriMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != 2 * mesh.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: 2 * mesh.num_vertices(),
                found: values.len(),
            });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("vector component {} at vertex {}", j % 2, j / 2)));
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Arc<TriMesh>) -> Self {
        let n = 2 * mesh.num_vertices();
        Self { mesh, values: vec![0.0; n] }
    }

    pub fn interpolate(mesh: Arc<TriMesh>, f: impl Fn(f64, f64) -> [f64; 2]) -> Result<Self> {
        let values = mesh.vertices().iter().flat_map(|p| f(p[0], p[1])).collect();
        Self::new(mesh, values)
    }

    pub fn from_components(x: &FeScalarField, y: &FeScalarField) -> Result<Self> {
        x.same_mesh(y)?;
        let values = x.values().iter().zip(y.values()).flat_map(|(&a, &b)| [a, b]).collect();
        Self::new(x.mesh().clone(), values)
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn component(&self, k: usize) -> FeScalarField {
        assert!(k < 2, "vector fields have two components");
        FeScalarField {
            mesh: self.mesh.clone(),
            values: self.values.iter().skip(k).step_by(2).copied().collect(),
        }
    }

    #[inline]
    pub fn eval(&self, e: usize, bary: &[f64; 3]) -> [f64; 2] {
        let t = self.mesh.triangle(e);
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += bary[k] * self.values[2 * t[k]];
            out[1] += bary[k] * self.values[2 * t[k] + 1];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interpolation_of_constants_and_linears() {
        let mesh = Arc::new(TriMesh::unit_square(2).unwrap());
        let one = FeScalarField::interpolate(mesh.clone(), |_, _| 1.0).unwrap();
        assert!(one.values().iter().all(|&v| v == 1.0));
        let x = FeScalarField::interpolate(mesh.clone(), |x, _| x).unwrap();
        for row in x.values().chunks(3) {
            assert_eq!(row, &[0.0, 0.5, 1.0]);
        }
        assert!(FeScalarField::interpolate(mesh, |x, _| if x > 0.7 { f64::NAN } else { 0.0 }).is_err());
    }

    #[test]
    fn positive_negative_parts() {
        let mesh = Arc::new(TriMesh::unit_square(1).unwrap());
        let f = FeScalarField::new(mesh.clone(), vec![1.0, -2.0, 0.0, 3.0]).unwrap();
        assert_eq!(f.positive_part().values(), &[1.0, 0.0, 0.0, 3.0]);
        assert_eq!(f.negative_part().values(), &[0.0, -2.0, 0.0, 0.0]);
        let g = FeScalarField::new(mesh, vec![1.0, 2.0, 0.0, 3.0]).unwrap();
        assert_eq!(g.positive_part(), g);
    }

    #[test]
    fn element_gradient_of_linear_function() {
        let mesh = Arc::new(TriMesh::unit_square(3).unwrap());
        let f = FeScalarField::interpolate(mesh.clone(), |x, y| 2.0 * x - 3.0 * y + 1.0).unwrap();
        for e in 0..mesh.num_triangles() {
            let g = f.element_gradient(e);
            assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mesh_mismatch_detected() {
        let a = FeScalarField::zeros(Arc::new(TriMesh::unit_square(1).unwrap()));
        let b = FeScalarField::zeros(Arc::new(TriMesh::unit_square(1).unwrap()));
        assert!(matches!(a.sub(&b), Err(Error::MeshMismatch)));
    }

    proptest! {
        #[test]
        fn parts_sum_to_original(vals in proptest::collection::vec(-10.0f64..10.0, 9)) {
            let mesh = Arc::new(TriMesh::unit_square(2).unwrap());
            let f = FeScalarField::new(mesh, vals).unwrap();
            let (p, n) = (f.positive_part(), f.negative_part());
            for j in 0..f.len() {
                prop_assert!(p.values()[j] >= 0.0 && n.values()[j] <= 0.0);
                prop_assert_eq!(p.values()[j] + n.values()[j], f.values()[j]);
            }
        }
    }
}
