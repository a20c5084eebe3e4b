use std::sync::Arc;

use super::{enzyme_matrix, solve_enzyme, step_v, InitialFields};
use crate::error::{Error, Result};
use crate::fem::{Factor, FeScalarField, FeSpace};
use crate::linalg::{cg_solve, CgOptions, CsrMatrix};
use crate::params::ModelParams;

/// Lower bound accepted for the lagged transformed density.
const S_SLACK: f64 = -1e-12;

/// One time level in transformed variables; `u` is recovered from `s` and `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct UvmsState {
    pub s: FeScalarField,
    pub v: FeScalarField,
    pub m: FeScalarField,
    pub u: FeScalarField,
    pub step: usize,
    pub time: f64,
}

/// u_j = φ(v_j) s_j.
pub fn recover_u(s: &FeScalarField, v: &FeScalarField, params: &ModelParams) -> Result<FeScalarField> {
    s.same_mesh(v)?;
    let mut out = Vec::with_capacity(s.len());
    for (&sj, &vj) in s.values().iter().zip(v.values()) {
        out.push(params.phi(vj)? * sj);
    }
    FeScalarField::new(s.mesh().clone(), out)
}

/// Decoupled scheme in the divergence-form variable s = u/φ(v).
pub struct Uvms {
    space: Arc<FeSpace>,
    params: ModelParams,
    dt: f64,
    cg: CgOptions,
    enzyme: CsrMatrix,
}

impl Uvms {
    pub fn new(space: Arc<FeSpace>, params: ModelParams, dt: f64, cg: CgOptions) -> Result<Self> {
        params.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let enzyme = enzyme_matrix(&space, &params, dt)?;
        Ok(Self { space, params, dt, cg, enzyme })
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// s⁰_j = u⁰_j / φ(v⁰_j); σ⁰ is not used by this scheme.
    pub fn initialize(&self, init: InitialFields) -> Result<UvmsState> {
        for f in [&init.u, &init.v, &init.m] {
            self.space.check_field(f)?;
        }
        let mut s = Vec::with_capacity(init.u.len());
        for (&u, &v) in init.u.values().iter().zip(init.v.values()) {
            s.push(u / self.params.phi(v)?);
        }
        let s = FeScalarField::new(self.space.mesh().clone(), s)?;
        let u = recover_u(&s, &init.v, &self.params)?;
        Ok(UvmsState { s, v: init.v, m: init.m, u, step: 0, time: 0.0 })
    }

    /// Enzyme with production from s φ(v) v at the previous level.
    pub fn step_m(&self, prev: &UvmsState) -> Result<FeScalarField> {
        let phi = |v: f64| self.params.phi_unchecked(v);
        let mut production = self.space.assemble_product_load(&[
            Factor::Field(&prev.s),
            Factor::Mapped(&prev.v, &phi),
            Factor::Field(&prev.v),
        ])?;
        production.iter_mut().for_each(|p| *p *= self.params.mu_m);
        solve_enzyme(&self.space, &self.enzyme, &prev.m, production, self.dt, &self.cg)
    }

    /// Transformed cell density: φ-weighted lumped time derivative and
    /// diffusion, lumped implicit reaction terms, lagged loads.
    pub fn step_s(&self, prev: &UvmsState, v_new: &FeScalarField, m_new: &FeScalarField) -> Result<FeScalarField> {
        let space = &self.space;
        let p = &self.params;
        space.check_field(&prev.s)?;
        space.check_field(v_new)?;
        space.check_field(m_new)?;
        if let Some(j) = prev.s.values().iter().position(|&x| x < S_SLACK) {
            return Err(Error::InvalidState(format!(
                "transformed density is negative at node {j} ({:e})",
                prev.s.values()[j]
            )));
        }
        let phi_nodes = v_new.map(|v| p.phi_unchecked(v))?;
        let ml = space.lumped_mass().values();

        // diagonal: M_L,jj [φ_j/Δt + μ_u s_j φ_j² + μ_u φ_j v_j]
        let mut diag = Vec::with_capacity(ml.len());
        let mut rhs = Vec::with_capacity(ml.len());
        for j in 0..ml.len() {
            let phi = phi_nodes.values()[j];
            let s = prev.s.values()[j];
            let v = v_new.values()[j];
            diag.push(ml[j] * (phi / self.dt + p.mu_u * s * phi * phi + p.mu_u * phi * v));
            rhs.push(ml[j] * phi * s / self.dt);
        }
        let mut a = space.assemble_stiffness_with(|e, q| p.phi_unchecked(v_new.eval(e, q)))?;
        a.scale(p.d_u);
        a.add_diagonal(1.0, &crate::linalg::DiagMatrix::new(diag)?)?;

        if p.alpha != 0.0 {
            let phi_chi = |v: f64| p.phi_unchecked(v) * p.chi(v);
            let hapto = space.assemble_product_load(&[
                Factor::Field(&prev.s),
                Factor::Mapped(v_new, &phi_chi),
                Factor::Field(v_new),
                Factor::Field(m_new),
            ])?;
            let c = p.alpha / p.d_u;
            for (r, h) in rhs.iter_mut().zip(&hapto) {
                *r += c * h;
            }
        }
        if p.mu_u != 0.0 {
            let phi = |v: f64| p.phi_unchecked(v);
            let growth = space.assemble_product_load(&[Factor::Field(&prev.s), Factor::Mapped(v_new, &phi)])?;
            for (r, g) in rhs.iter_mut().zip(&growth) {
                *r += p.mu_u * g;
            }
        }
        let sol = cg_solve(&a, &rhs, Some(prev.s.values()), &self.cg)?;
        FeScalarField::new(space.mesh().clone(), sol.x)
    }

    /// m, then v, then s, then u = φ(v) s.
    pub fn advance(&self, prev: &UvmsState) -> Result<UvmsState> {
        let step = prev.step + 1;
        let inner = || -> Result<UvmsState> {
            let m = self.step_m(prev)?;
            let v = step_v(&prev.v, &m, self.params.alpha, self.dt)?;
            let s = self.step_s(prev, &v, &m)?;
            let u = recover_u(&s, &v, &self.params)?;
            Ok(UvmsState { s, v, m, u, step, time: step as f64 * self.dt })
        };
        inner().map_err(|e| e.at_step(step))
    }
}
