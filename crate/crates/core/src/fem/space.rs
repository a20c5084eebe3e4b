//! P1 assembly on a fixed mesh.
//!
//! [`FeSpace`] owns the shared sparsity pattern, the element-to-slot scatter
//! map and the constant matrices (lumped mass, consistent mass, stiffness).
//! Local element contributions may be computed on a rayon pool; they are
//! always scattered into the global arrays sequentially in element order, so
//! threaded and single-threaded assembly give bit-identical results.

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;

use super::field::{FeScalarField, FeVectorField};
use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use crate::linalg::{cg_solve, CgOptions, CsrMatrix, DiagMatrix};
use crate::mesh::TriMesh;

/// Pointwise map applied to a field value at a quadrature point.
pub type PointMap<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

/// One factor of a product integrand `∫ Π f_k · λ_i`.
#[derive(Clone, Copy)]
pub enum Factor<'a> {
    /// P1 field evaluated at the quadrature point.
    Field(&'a FeScalarField),
    /// Pointwise map composed with the P1 field value at the quadrature point.
    Mapped(&'a FeScalarField, PointMap<'a>),
    /// One value per triangle, e.g. a component of an element gradient.
    PerElement(&'a [f64]),
}

impl Factor<'_> {
    #[inline]
    fn eval(&self, e: usize, bary: &[f64; 3]) -> f64 {
        match self {
            Factor::Field(f) => f.eval(e, bary),
            Factor::Mapped(f, map) => map(f.eval(e, bary)),
            Factor::PerElement(vals) => vals[e],
        }
    }
}

pub struct FeSpace {
    mesh: Arc<TriMesh>,
    rule: QuadratureRule,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    slots: Vec<[usize; 9]>,
    lumped: DiagMatrix,
    mass: CsrMatrix,
    stiffness: CsrMatrix,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl FeSpace {
    /// Single-threaded space with the degree-2 interior rule.
    pub fn new(mesh: Arc<TriMesh>) -> Self {
        let nv = mesh.num_vertices();
        let mut neighbours: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nv];
        for t in mesh.triangles() {
            for &a in t {
                for &b in t {
                    neighbours[a].insert(b);
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(nv + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for set in &neighbours {
            col_idx.extend(set.iter().copied());
            row_ptr.push(col_idx.len());
        }
        let slots = mesh
            .triangles()
            .iter()
            .map(|t| {
                let mut s = [0usize; 9];
                for a in 0..3 {
                    let row = &col_idx[row_ptr[t[a]]..row_ptr[t[a] + 1]];
                    for b in 0..3 {
                        s[3 * a + b] = row_ptr[t[a]] + row.binary_search(&t[b]).expect("pattern");
                    }
                }
                s
            })
            .collect();

        let empty = CsrMatrix::from_parts(0, vec![0], vec![], vec![]).expect("empty");
        let mut space = Self {
            mesh,
            rule: QuadratureRule::degree2(),
            row_ptr,
            col_idx,
            slots,
            lumped: DiagMatrix::new(Vec::new()).expect("empty"),
            mass: empty.clone(),
            stiffness: empty,
            pool: None,
        };
        space.lumped = space.assemble_lumped_mass();
        space.mass = space.assemble_mass();
        space.stiffness = space.assemble_matrix(|e| {
            let g = space.mesh.geometry(e);
            stiffness_local(g.area, &g.gradients, 1.0)
        });
        space
    }

    /// Replaces the quadrature rule used for weighted forms and loads.
    pub fn with_rule(mut self, rule: QuadratureRule) -> Self {
        self.rule = rule;
        self
    }

    /// Runs element loops on `threads` workers; 0 keeps everything on the
    /// calling thread.
    pub fn with_threads(mut self, threads: usize) -> Result<Self> {
        self.pool = if threads == 0 {
            None
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Some(Arc::new(pool))
        };
        Ok(self)
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_vertices()
    }

    /// Diagonal of ∫ I_h(λ_i λ_j).
    pub fn lumped_mass(&self) -> &DiagMatrix {
        &self.lumped
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// Unweighted stiffness ∫ ∇λ_i·∇λ_j.
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    fn per_element<T: Send>(&self, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        let ne = self.mesh.num_triangles();
        match &self.pool {
            None => (0..ne).map(f).collect(),
            Some(pool) => pool.install(|| (0..ne).into_par_iter().map(f).collect()),
        }
    }

    fn assemble_matrix(&self, local: impl Fn(usize) -> [f64; 9] + Sync + Send) -> CsrMatrix {
        let locals = self.per_element(local);
        let mut values = vec![0.0; self.col_idx.len()];
        for (slots, loc) in self.slots.iter().zip(&locals) {
            for k in 0..9 {
                values[slots[k]] += loc[k];
            }
        }
        CsrMatrix::from_parts(self.num_nodes(), self.row_ptr.clone(), self.col_idx.clone(), values)
            .expect("valid pattern")
    }

    fn assemble_vector(&self, local: impl Fn(usize) -> [f64; 3] + Sync + Send) -> Vec<f64> {
        let locals = self.per_element(local);
        let mut out = vec![0.0; self.num_nodes()];
        for (t, loc) in self.mesh.triangles().iter().zip(&locals) {
            for k in 0..3 {
                out[t[k]] += loc[k];
            }
        }
        out
    }

    pub fn assemble_lumped_mass(&self) -> DiagMatrix {
        let d = self.assemble_vector(|e| [self.mesh.geometry(e).area / 3.0; 3]);
        DiagMatrix::new(d).expect("finite areas")
    }

    /// Consistent mass, local matrix (A/12)·[[2,1,1],[1,2,1],[1,1,2]].
    pub fn assemble_mass(&self) -> CsrMatrix {
        self.assemble_matrix(|e| {
            let a = self.mesh.geometry(e).area / 12.0;
            let mut loc = [a; 9];
            loc[0] = 2.0 * a;
            loc[4] = 2.0 * a;
            loc[8] = 2.0 * a;
            loc
        })
    }

    /// Stiffness ∫ w ∇λ_i·∇λ_j with `w` the P1 interpolant of `weight`
    /// (unweighted when `None`).
    pub fn assemble_stiffness(&self, weight: Option<&FeScalarField>) -> Result<CsrMatrix> {
        match weight {
            None => Ok(self.stiffness.clone()),
            Some(w) => {
                self.check_field(w)?;
                self.assemble_stiffness_with(|e, b| w.eval(e, b))
            }
        }
    }

    /// Stiffness with a coefficient evaluated at each quadrature point.
    pub fn assemble_stiffness_with(&self, coeff: impl Fn(usize, &[f64; 3]) -> f64 + Sync + Send) -> Result<CsrMatrix> {
        let m = self.assemble_matrix(|e| {
            let g = self.mesh.geometry(e);
            let c: f64 = self.rule.iter().map(|(p, w)| w * coeff(e, p)).sum();
            stiffness_local(g.area, &g.gradients, c)
        });
        check_finite(m.values(), "weighted stiffness")?;
        Ok(m)
    }

    /// Mass ∫ c λ_i λ_j with `c` evaluated at each quadrature point.
    pub fn assemble_weighted_mass_with(&self, coeff: impl Fn(usize, &[f64; 3]) -> f64 + Sync + Send) -> Result<CsrMatrix> {
        let m = self.assemble_matrix(|e| {
            let area = self.mesh.geometry(e).area;
            let mut loc = [0.0; 9];
            for (p, w) in self.rule.iter() {
                let c = area * w * coeff(e, p);
                for a in 0..3 {
                    for b in 0..3 {
                        loc[3 * a + b] += c * p[a] * p[b];
                    }
                }
            }
            loc
        });
        check_finite(m.values(), "weighted mass")?;
        Ok(m)
    }

    /// Mass weighted by the P1 field `weight` at quadrature points.
    pub fn assemble_weighted_mass(&self, weight: &FeScalarField) -> Result<CsrMatrix> {
        self.check_field(weight)?;
        self.assemble_weighted_mass_with(|e, b| weight.eval(e, b))
    }

    /// Lumped mass scaled nodewise: entry j = M_L,jj · w_j.
    pub fn assemble_weighted_lumped(&self, weight: &FeScalarField) -> Result<DiagMatrix> {
        self.check_field(weight)?;
        self.weighted_lumped_from(weight.values())
    }

    pub(crate) fn weighted_lumped_from(&self, weights: &[f64]) -> Result<DiagMatrix> {
        if weights.len() != self.num_nodes() {
            return Err(Error::DimensionMismatch { expected: self.num_nodes(), found: weights.len() });
        }
        DiagMatrix::new(self.lumped.values().iter().zip(weights).map(|(m, w)| m * w).collect())
    }

    /// (a, b)^h = ∫ I_h(a b) = aᵀ M_L b.
    pub fn discrete_inner_h(&self, a: &FeScalarField, b: &FeScalarField) -> Result<f64> {
        self.check_field(a)?;
        self.check_field(b)?;
        self.lumped.quadratic(a.values(), b.values())
    }

    /// Entry i = ∫ χ(v) u σ·∇λ_i with every factor evaluated at quadrature points.
    pub fn assemble_haptotaxis_load(
        &self,
        v: &FeScalarField,
        u_prev: &FeScalarField,
        sigma_prev: &FeVectorField,
        chi: PointMap<'_>,
    ) -> Result<Vec<f64>> {
        self.check_field(v)?;
        self.check_field(u_prev)?;
        if !Arc::ptr_eq(sigma_prev.mesh(), &self.mesh) {
            return Err(Error::MeshMismatch);
        }
        let load = self.assemble_vector(|e| {
            let g = self.mesh.geometry(e);
            let mut flux = [0.0; 2];
            for (p, w) in self.rule.iter() {
                let s = sigma_prev.eval(e, p);
                let c = w * chi(v.eval(e, p)) * u_prev.eval(e, p);
                flux[0] += c * s[0];
                flux[1] += c * s[1];
            }
            let mut loc = [0.0; 3];
            for k in 0..3 {
                loc[k] = g.area * (flux[0] * g.gradients[k][0] + flux[1] * g.gradients[k][1]);
            }
            loc
        });
        check_finite(&load, "haptotaxis load")?;
        Ok(load)
    }

    /// Entry i = ∫ (Π_k f_k) λ_i over the domain.
    pub fn assemble_product_load(&self, factors: &[Factor<'_>]) -> Result<Vec<f64>> {
        for f in factors {
            match f {
                Factor::Field(f) | Factor::Mapped(f, _) => self.check_field(f)?,
                Factor::PerElement(vals) => {
                    if vals.len() != self.mesh.num_triangles() {
                        return Err(Error::DimensionMismatch {
                            expected: self.mesh.num_triangles(),
                            found: vals.len(),
                        });
                    }
                }
            }
        }
        self.assemble_load_with(|e, p| factors.iter().map(|f| f.eval(e, p)).product())
    }

    /// Entry i = ∫ g λ_i for an integrand evaluated at quadrature points.
    pub fn assemble_load_with(&self, integrand: impl Fn(usize, &[f64; 3]) -> f64 + Sync + Send) -> Result<Vec<f64>> {
        let load = self.assemble_vector(|e| {
            let area = self.mesh.geometry(e).area;
            let mut loc = [0.0; 3];
            for (p, w) in self.rule.iter() {
                let c = area * w * integrand(e, p);
                for k in 0..3 {
                    loc[k] += c * p[k];
                }
            }
            loc
        });
        check_finite(&load, "load vector")?;
        Ok(load)
    }

    /// P1 function p with (∇(p − f), ∇q) + (p − f, q) = 0 for all P1 q.
    ///
    /// The right-hand side is integrated with the degree-4 rule and needs the
    /// analytic gradient of `f`; without one the projection is refused.
    pub fn elliptic_projection(
        &self,
        f: &(dyn Fn(f64, f64) -> f64 + Sync),
        grad: Option<&(dyn Fn(f64, f64) -> [f64; 2] + Sync)>,
        opts: &CgOptions,
    ) -> Result<FeScalarField> {
        let grad = grad.ok_or_else(|| {
            Error::InvalidArgument("elliptic projection needs the analytic gradient of the data".into())
        })?;
        let rule = QuadratureRule::degree4();
        let load = self.assemble_vector(|e| {
            let g = self.mesh.geometry(e);
            let mut loc = [0.0; 3];
            for (p, w) in rule.iter() {
                let x = self.mesh.point_at(e, p);
                let fv = f(x[0], x[1]);
                let gv = grad(x[0], x[1]);
                for k in 0..3 {
                    loc[k] += g.area * w * (gv[0] * g.gradients[k][0] + gv[1] * g.gradients[k][1] + fv * p[k]);
                }
            }
            loc
        });
        check_finite(&load, "projection load")?;
        let mut a = self.stiffness.clone();
        a.add_scaled(1.0, &self.mass)?;
        let initial = FeScalarField::interpolate(self.mesh.clone(), f)?;
        let sol = cg_solve(&a, &load, Some(initial.values()), opts)?;
        FeScalarField::new(self.mesh.clone(), sol.x)
    }

    /// ‖a‖_{L²} = √(aᵀ M a).
    pub fn l2_norm(&self, a: &FeScalarField) -> Result<f64> {
        Ok(self.l2_inner(a, a)?.max(0.0).sqrt())
    }

    pub fn l2_inner(&self, a: &FeScalarField, b: &FeScalarField) -> Result<f64> {
        self.check_field(a)?;
        self.check_field(b)?;
        let mb = self.mass.mul_vec(b.values())?;
        Ok(crate::linalg::dot(a.values(), &mb))
    }

    /// |a|_{H¹} = √(aᵀ K a).
    pub fn h1_seminorm(&self, a: &FeScalarField) -> Result<f64> {
        self.check_field(a)?;
        let ka = self.stiffness.mul_vec(a.values())?;
        Ok(crate::linalg::dot(a.values(), &ka).max(0.0).sqrt())
    }

    pub fn l2_error(&self, a: &FeScalarField, b: &FeScalarField) -> Result<f64> {
        self.l2_norm(&a.sub(b)?)
    }

    pub fn h1_error(&self, a: &FeScalarField, b: &FeScalarField) -> Result<f64> {
        self.h1_seminorm(&a.sub(b)?)
    }

    /// ‖σ‖_{L²} summed over both components.
    pub fn l2_norm_vector(&self, a: &FeVectorField) -> Result<f64> {
        let x = self.l2_norm(&a.component(0))?;
        let y = self.l2_norm(&a.component(1))?;
        Ok(x.hypot(y))
    }

    pub(crate) fn check_field(&self, f: &FeScalarField) -> Result<()> {
        if Arc::ptr_eq(f.mesh(), &self.mesh) {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }
}

fn stiffness_local(area: f64, g: &[[f64; 2]; 3], coeff: f64) -> [f64; 9] {
    let mut loc = [0.0; 9];
    for a in 0..3 {
        for b in 0..3 {
            loc[3 * a + b] = coeff * area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
        }
    }
    loc
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(format!("{what} entry {i}"))),
        None => Ok(()),
    }
}
