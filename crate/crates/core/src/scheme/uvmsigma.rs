use std::sync::Arc;

use super::{enzyme_matrix, solve_enzyme, step_v, InitialFields};
use crate::error::{Error, Result};
use crate::fem::{Factor, FeScalarField, FeSpace, FeVectorField};
use crate::linalg::{cg_solve, CgOptions, CsrMatrix};
use crate::params::ModelParams;

/// One time level: enzyme, matrix, cells and the matrix gradient σ.
#[derive(Debug, Clone, PartialEq)]
pub struct UvmSigmaState {
    pub m: FeScalarField,
    pub v: FeScalarField,
    pub u: FeScalarField,
    pub sigma: FeVectorField,
    pub step: usize,
    pub time: f64,
}

/// Decoupled scheme with σ ≈ ∇v as an independent unknown.
pub struct UvmSigma {
    space: Arc<FeSpace>,
    params: ModelParams,
    dt: f64,
    cg: CgOptions,
    enzyme: CsrMatrix,
}

impl UvmSigma {
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

    pub fn initialize(&self, init: InitialFields) -> Result<UvmSigmaState> {
        for f in [&init.u, &init.v, &init.m] {
            self.space.check_field(f)?;
        }
        Ok(UvmSigmaState { m: init.m, v: init.v, u: init.u, sigma: init.sigma, step: 0, time: 0.0 })
    }

    /// Enzyme: lumped time derivative and decay, diffusion, production from [u]₊v.
    pub fn step_m(&self, prev: &UvmSigmaState) -> Result<FeScalarField> {
        let positive = |x: f64| x.max(0.0);
        let mut production = self
            .space
            .assemble_product_load(&[Factor::Mapped(&prev.u, &positive), Factor::Field(&prev.v)])?;
        production.iter_mut().for_each(|p| *p *= self.params.mu_m);
        solve_enzyme(&self.space, &self.enzyme, &prev.m, production, self.dt, &self.cg)
    }

    /// Cells: haptotactic flux from the lagged σ, logistic growth lagged except
    /// the −u·v term which is implicit.
    pub fn step_u(&self, prev: &UvmSigmaState, v_new: &FeScalarField) -> Result<FeScalarField> {
        let space = &self.space;
        let p = &self.params;
        let mut a = space.mass().clone();
        a.scale(1.0 / self.dt);
        a.add_scaled(p.d_u, space.stiffness())?;
        if p.mu_u != 0.0 {
            a.add_scaled(p.mu_u, &space.assemble_weighted_mass(v_new)?)?;
        }

        let chi = |v: f64| p.chi(v);
        let mut rhs = space.assemble_haptotaxis_load(v_new, &prev.u, &prev.sigma, &chi)?;
        let mu_prev = space.mass().mul_vec(prev.u.values())?;
        for (r, m) in rhs.iter_mut().zip(&mu_prev) {
            *r += m / self.dt;
        }
        if p.mu_u != 0.0 {
            let logistic = |x: f64| x - x * x;
            let growth = space.assemble_product_load(&[Factor::Mapped(&prev.u, &logistic)])?;
            for (r, g) in rhs.iter_mut().zip(&growth) {
                *r += p.mu_u * g;
            }
        }
        let sol = cg_solve(&a, &rhs, Some(prev.u.values()), &self.cg)?;
        FeScalarField::new(space.mesh().clone(), sol.x)
    }

    /// σ: relaxation towards ∇v driven by −α v ∇m, one scalar solve per component.
    pub fn step_sigma(&self, prev: &UvmSigmaState, m_new: &FeScalarField, v_new: &FeScalarField) -> Result<FeVectorField> {
        let space = &self.space;
        let alpha = self.params.alpha;
        let mut a = space.mass().clone();
        a.scale(1.0 / self.dt);
        if alpha != 0.0 {
            a.add_scaled(alpha, &space.assemble_weighted_mass(m_new)?)?;
        }
        let mut comps = Vec::with_capacity(2);
        for k in 0..2 {
            let s_prev = prev.sigma.component(k);
            let mut rhs = space.mass().mul_vec(s_prev.values())?;
            rhs.iter_mut().for_each(|r| *r /= self.dt);
            if alpha != 0.0 {
                let dm = m_new.element_gradients(k);
                let drive = space.assemble_product_load(&[Factor::Field(v_new), Factor::PerElement(&dm)])?;
                for (r, d) in rhs.iter_mut().zip(&drive) {
                    *r -= alpha * d;
                }
            }
            let sol = cg_solve(&a, &rhs, Some(s_prev.values()), &self.cg)?;
            comps.push(FeScalarField::new(space.mesh().clone(), sol.x)?);
        }
        FeVectorField::from_components(&comps[0], &comps[1])
    }

    /// m, then v, then u, then σ.
    pub fn advance(&self, prev: &UvmSigmaState) -> Result<UvmSigmaState> {
        let step = prev.step + 1;
        let inner = || -> Result<UvmSigmaState> {
            let m = self.step_m(prev)?;
            let v = step_v(&prev.v, &m, self.params.alpha, self.dt)?;
            let u = self.step_u(prev, &v)?;
            let sigma = self.step_sigma(prev, &m, &v)?;
            Ok(UvmSigmaState { m, v, u, sigma, step, time: step as f64 * self.dt })
        };
        inner().map_err(|e| e.at_step(step))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TriMesh;
    use crate::problems::{default_params, test1_setup};
    use crate::scheme::InitialProjection;

    const TIGHT: f64 = 1e-13;

    fn scheme(n: usize, params: ModelParams) -> UvmSigma {
        let space = Arc::new(FeSpace::new(Arc::new(TriMesh::unit_square(n).unwrap())));
        UvmSigma::new(space, params, 0.01, CgOptions::with_tol(TIGHT)).unwrap()
    }

    fn constant_state(s: &UvmSigma, m: f64, v: f64, u: f64, sigma: [f64; 2]) -> UvmSigmaState {
        let mesh = s.space().mesh().clone();
        UvmSigmaState {
            m: FeScalarField::constant(mesh.clone(), m),
            v: FeScalarField::constant(mesh.clone(), v),
            u: FeScalarField::constant(mesh.clone(), u),
            sigma: FeVectorField::interpolate(mesh, |_, _| sigma).unwrap(),
            step: 0,
            time: 0.0,
        }
    }

    fn all_close(f: &FeScalarField, c: f64, tol: f64) -> bool {
        f.values().iter().all(|&x| (x - c).abs() <= tol)
    }

    #[test]
    fn enzyme_constant_reductions() {
        let s = scheme(2, default_params(0.0));
        assert!(all_close(&s.step_m(&constant_state(&s, 0.0, 1.0, 0.0, [0.0; 2])).unwrap(), 0.0, 0.0));
        assert!(all_close(&s.step_m(&constant_state(&s, 0.7, 1.0, 0.0, [0.0; 2])).unwrap(), 0.7, 1e-12));
        let mut p = default_params(0.0);
        p.rho_m = 3.0;
        let s = scheme(2, p);
        let m = s.step_m(&constant_state(&s, 0.7, 1.0, 0.0, [0.0; 2])).unwrap();
        assert!(all_close(&m, 0.7 / (1.0 + 3.0 * 0.01), 1e-12));
    }

    #[test]
    fn cell_constant_reductions() {
        let mut p = default_params(0.0);
        p.sensitivity = crate::params::Sensitivity::custom(|_| 0.0, |_| 0.0);
        let s = scheme(2, p);
        let prev = constant_state(&s, 0.0, 1.0, 0.4, [0.3, -0.2]);
        assert!(all_close(&s.step_u(&prev, &prev.v).unwrap(), 0.4, 1e-12));

        let s = scheme(2, default_params(0.0));
        let prev = constant_state(&s, 0.5, 1.0, 0.0, [0.3, -0.2]);
        assert!(all_close(&s.step_u(&prev, &prev.v).unwrap(), 0.0, 0.0));

        let s = scheme(3, default_params(2.0));
        let c = 0.3;
        let prev = constant_state(&s, 0.0, 0.0, c, [0.0; 2]);
        let u = s.step_u(&prev, &prev.v).unwrap();
        assert!(all_close(&u, c + 2.0 * 0.01 * (c - c * c), 1e-12));
    }

    #[test]
    fn sigma_constant_reductions() {
        let s = scheme(2, default_params(0.0));
        let prev = constant_state(&s, 0.0, 1.0, 0.0, [0.3, -0.2]);
        let zero = FeScalarField::zeros(s.space().mesh().clone());
        let sig = s.step_sigma(&prev, &zero, &prev.v).unwrap();
        assert!(sig.values().iter().zip(prev.sigma.values()).all(|(a, b)| (a - b).abs() < 1e-12));

        let c = 0.8;
        let m = FeScalarField::constant(s.space().mesh().clone(), c);
        let sig = s.step_sigma(&prev, &m, &prev.v).unwrap();
        let f = 1.0 / (1.0 + 10.0 * 0.01 * c);
        assert!(sig.values().iter().zip(prev.sigma.values()).all(|(a, b)| (a - b * f).abs() < 1e-12));

        let prev = constant_state(&s, 0.0, 1.0, 0.0, [0.0; 2]);
        let sig = s.step_sigma(&prev, &m, &prev.v).unwrap();
        assert!(sig.values().iter().all(|&x| x.abs() < 1e-14));
    }

    #[test]
    fn one_test1_step_stays_nonnegative_and_repeats_exactly() {
        let setup = test1_setup(0.0);
        let s = scheme(8, setup.params.clone());
        let init = InitialFields::new(s.space(), &setup, InitialProjection::Nodal, &CgOptions::with_tol(TIGHT)).unwrap();
        let st0 = s.initialize(init).unwrap();
        let a = s.advance(&st0).unwrap();
        let b = s.advance(&st0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.step, 1);
        assert!(a.v.min() >= 0.0);
        assert!(a.m.min() >= -1e-12);
        assert!(a.v.values().iter().zip(st0.v.values()).all(|(n, o)| n <= o));
    }

    #[test]
    fn failures_carry_the_step_index() {
        let setup = test1_setup(0.0);
        let space = Arc::new(FeSpace::new(Arc::new(TriMesh::unit_square(4).unwrap())));
        let cg = CgOptions { tol: 1e-14, max_iter: Some(1), jacobi: false };
        let s = UvmSigma::new(space, setup.params.clone(), 0.01, cg).unwrap();
        let init = InitialFields::new(s.space(), &setup, InitialProjection::Nodal, &CgOptions::default()).unwrap();
        let mut st = s.initialize(init).unwrap();
        st.step = 6;
        match s.advance(&st) {
            Err(Error::Step { step, .. }) => assert_eq!(step, 7),
            other => panic!("expected step error, got {:?}", other.map(|s| s.step)),
        }
    }
}
