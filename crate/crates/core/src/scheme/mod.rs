//! Time integration.
//!
//! Both schemes share the enzyme solve and the closed-form matrix update; they
//! differ in how the cell density is advanced. [`Simulation`] wraps either one
//! behind a common stepping interface.

mod uvms;
mod uvmsigma;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use uvms::{recover_u, Uvms, UvmsState};
pub use uvmsigma::{UvmSigma, UvmSigmaState};

use crate::error::{Error, Result};
use crate::fem::{FeScalarField, FeSpace, FeVectorField};
use crate::linalg::{cg_solve, CgOptions, CsrMatrix};
use crate::params::ModelParams;
use crate::problems::ProblemSetup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    /// gradient of the matrix carried as an extra unknown
    UvmSigma,
    /// cell density transformed to divergence form
    Uvms,
}

impl FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uvmsigma" => Ok(Self::UvmSigma),
            "uvms" => Ok(Self::Uvms),
            other => Err(Error::InvalidArgument(format!("unknown scheme `{other}` (uvmsigma, uvms)"))),
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::UvmSigma => "uvmsigma",
            Self::Uvms => "uvms",
        })
    }
}

/// How u₀ is brought into the discrete space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialProjection {
    #[default]
    Nodal,
    /// (K + M) projection; needs the analytic gradient of u₀.
    Elliptic,
}

/// Discrete initial data shared by both schemes.
#[derive(Debug, Clone)]
pub struct InitialFields {
    pub u: FeScalarField,
    pub v: FeScalarField,
    pub m: FeScalarField,
    pub sigma: FeVectorField,
}

impl InitialFields {
    pub fn new(space: &FeSpace, setup: &ProblemSetup, projection: InitialProjection, cg: &CgOptions) -> Result<Self> {
        let mesh = space.mesh().clone();
        let u = match projection {
            InitialProjection::Nodal => FeScalarField::interpolate(mesh.clone(), |x, y| (setup.u0)(x, y))?,
            InitialProjection::Elliptic => {
                let f = |x: f64, y: f64| (setup.u0)(x, y);
                match &setup.grad_u0 {
                    Some(g) => space.elliptic_projection(&f, Some(&|x: f64, y: f64| g(x, y)), cg)?,
                    None => space.elliptic_projection(&f, None, cg)?,
                }
            }
        };
        let mut v = FeScalarField::interpolate(mesh.clone(), |x, y| (setup.v0)(x, y))?;
        if setup.clamp_negative_v0 {
            v = v.positive_part();
        }
        let m = FeScalarField::interpolate(mesh.clone(), |x, y| (setup.m0)(x, y))?;
        let sigma = FeVectorField::interpolate(mesh, |x, y| (setup.sigma0)(x, y))?;
        for (name, f) in [("v", &v), ("m", &m)] {
            if let Some(j) = f.values().iter().position(|&x| x < 0.0) {
                return Err(Error::InvalidState(format!(
                    "initial {name} is negative at vertex {j} ({})",
                    f.values()[j]
                )));
            }
        }
        Ok(Self { u, v, m, sigma })
    }
}

/// v^n_j = v^{n-1}_j / (1 + αΔt m^n_j), node by node.
pub fn step_v(v_prev: &FeScalarField, m_new: &FeScalarField, alpha: f64, dt: f64) -> Result<FeScalarField> {
    v_prev.same_mesh(m_new)?;
    let mut out = Vec::with_capacity(v_prev.len());
    for (j, (&v, &m)) in v_prev.values().iter().zip(m_new.values()).enumerate() {
        let denom = 1.0 + alpha * dt * m;
        if denom <= 0.0 {
            return Err(Error::PositivityBreach {
                node: j,
                msg: format!("matrix update denominator {denom} from enzyme value {m}"),
            });
        }
        out.push(v / denom);
    }
    if let Some(j) = m_new.values().iter().position(|&m| m < 0.0) {
        log::debug!("enzyme slightly negative before matrix update: node {j}, value {:e}", m_new.values()[j]);
    }
    FeScalarField::new(v_prev.mesh().clone(), out)
}

/// ((1/Δt + ρ_m) M_L + D_m K): the enzyme matrix, constant in time.
pub(crate) fn enzyme_matrix(space: &FeSpace, params: &ModelParams, dt: f64) -> Result<CsrMatrix> {
    let mut a = space.stiffness().clone();
    a.scale(params.d_m);
    a.add_diagonal(1.0 / dt + params.rho_m, space.lumped_mass())?;
    Ok(a)
}

/// Solves the enzyme system given the production load (already scaled).
pub(crate) fn solve_enzyme(
    space: &FeSpace,
    matrix: &CsrMatrix,
    m_prev: &FeScalarField,
    production: Vec<f64>,
    dt: f64,
    cg: &CgOptions,
) -> Result<FeScalarField> {
    let mut rhs = production;
    let ml = space.lumped_mass().values();
    for (j, r) in rhs.iter_mut().enumerate() {
        *r += ml[j] * m_prev.values()[j] / dt;
    }
    let sol = cg_solve(matrix, &rhs, Some(m_prev.values()), cg)?;
    FeScalarField::new(space.mesh().clone(), sol.x)
}

/// Borrowed view of the current time level of either scheme.
#[derive(Debug, Clone, Copy)]
pub struct StateView<'a> {
    pub step: usize,
    pub time: f64,
    pub u: &'a FeScalarField,
    pub v: &'a FeScalarField,
    pub m: &'a FeScalarField,
    pub sigma: Option<&'a FeVectorField>,
    pub s: Option<&'a FeScalarField>,
}

enum Runner {
    Sigma { scheme: UvmSigma, state: UvmSigmaState },
    S { scheme: Uvms, state: UvmsState },
}

/// A scheme together with its current state.
pub struct Simulation {
    runner: Runner,
}

impl Simulation {
    pub fn new(
        kind: SchemeKind,
        space: Arc<FeSpace>,
        setup: &ProblemSetup,
        dt: f64,
        cg: CgOptions,
        projection: InitialProjection,
    ) -> Result<Self> {
        let init = InitialFields::new(&space, setup, projection, &cg)?;
        let runner = match kind {
            SchemeKind::UvmSigma => {
                let scheme = UvmSigma::new(space, setup.params.clone(), dt, cg)?;
                let state = scheme.initialize(init)?;
                Runner::Sigma { scheme, state }
            }
            SchemeKind::Uvms => {
                let scheme = Uvms::new(space, setup.params.clone(), dt, cg)?;
                let state = scheme.initialize(init)?;
                Runner::S { scheme, state }
            }
        };
        Ok(Self { runner })
    }

    pub fn kind(&self) -> SchemeKind {
        match self.runner {
            Runner::Sigma { .. } => SchemeKind::UvmSigma,
            Runner::S { .. } => SchemeKind::Uvms,
        }
    }

    pub fn step(&mut self) -> Result<()> {
        match &mut self.runner {
            Runner::Sigma { scheme, state } => *state = scheme.advance(state)?,
            Runner::S { scheme, state } => *state = scheme.advance(state)?,
        }
        Ok(())
    }

    pub fn view(&self) -> StateView<'_> {
        match &self.runner {
            Runner::Sigma { state, .. } => StateView {
                step: state.step,
                time: state.time,
                u: &state.u,
                v: &state.v,
                m: &state.m,
                sigma: Some(&state.sigma),
                s: None,
            },
            Runner::S { state, .. } => StateView {
                step: state.step,
                time: state.time,
                u: &state.u,
                v: &state.v,
                m: &state.m,
                sigma: None,
                s: Some(&state.s),
            },
        }
    }

    pub fn step_index(&self) -> usize {
        self.view().step
    }

    pub fn time(&self) -> f64 {
        self.view().time
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TriMesh;
    use crate::problems::{test1_setup, zero_setup};

    fn mesh(n: usize) -> Arc<TriMesh> {
        Arc::new(TriMesh::unit_square(n).unwrap())
    }

    #[test]
    fn step_v_examples() {
        let mesh = mesh(2);
        let v = FeScalarField::constant(mesh.clone(), 1.0);
        let zero = FeScalarField::zeros(mesh.clone());
        assert_eq!(step_v(&v, &zero, 10.0, 0.01).unwrap(), v);
        let one = FeScalarField::constant(mesh.clone(), 1.0);
        let out = step_v(&v, &one, 10.0, 0.01).unwrap();
        assert!(out.values().iter().all(|&x| (x - 1.0 / 1.1).abs() < 1e-15));
        assert_eq!(step_v(&zero, &one, 10.0, 0.01).unwrap(), zero);
    }

    #[test]
    fn step_v_breach_names_node() {
        let mesh = mesh(1);
        let v = FeScalarField::constant(mesh.clone(), 1.0);
        let m = FeScalarField::new(mesh, vec![0.0, 0.0, -20.0, 0.0]).unwrap();
        match step_v(&v, &m, 10.0, 0.01) {
            Err(Error::PositivityBreach { node, .. }) => assert_eq!(node, 2),
            other => panic!("expected breach, got {other:?}"),
        }
    }

    #[test]
    fn scheme_names() {
        assert_eq!("uvms".parse::<SchemeKind>().unwrap(), SchemeKind::Uvms);
        assert_eq!(SchemeKind::UvmSigma.to_string(), "uvmsigma");
        assert!("uvw".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn initial_fields_test1_center() {
        let space = FeSpace::new(mesh(4));
        let init = InitialFields::new(&space, &test1_setup(0.0), InitialProjection::Nodal, &CgOptions::default()).unwrap();
        // vertex (0.5, 0.5) has index 2*5+2
        assert_eq!(init.u.values()[12], 1.0);
        assert_eq!(init.v.values()[12], 0.0);
        assert_eq!(init.m.values()[12], 0.5);
    }

    #[test]
    fn zero_data_stays_zero_in_both_schemes() {
        let space = Arc::new(FeSpace::new(mesh(4)));
        for kind in [SchemeKind::UvmSigma, SchemeKind::Uvms] {
            let mut sim = Simulation::new(kind, space.clone(), &zero_setup(2.0), 0.01, CgOptions::default(), InitialProjection::Nodal).unwrap();
            for _ in 0..3 {
                sim.step().unwrap();
            }
            let v = sim.view();
            assert_eq!(v.step, 3);
            for f in [v.u, v.v, v.m] {
                assert!(f.values().iter().all(|&x| x == 0.0));
            }
        }
    }
}
