//! Minima tracking, boundedness diagnostics, refinement studies and
//! cross-scheme comparison.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{FeScalarField, FeSpace, FeVectorField};
use crate::linalg::CgOptions;
use crate::mesh::{PointLocator, TriMesh};
use crate::params::TimeConfig;
use crate::problems::ProblemSetup;
use crate::scheme::{InitialProjection, SchemeKind, Simulation, StateView};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimaRow {
    pub step: usize,
    pub time: f64,
    pub min_u: f64,
    pub min_v: f64,
    pub min_m: f64,
    pub min_s: Option<f64>,
}

/// Nodal minima at every time level of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MinimaSeries {
    pub rows: Vec<MinimaRow>,
}

impl MinimaSeries {
    pub fn record(&mut self, state: &StateView<'_>) {
        self.rows.push(MinimaRow {
            step: state.step,
            time: state.time,
            min_u: state.u.min(),
            min_v: state.v.min(),
            min_m: state.m.min(),
            min_s: state.s.map(|s| s.min()),
        });
    }

    pub fn min_u(&self) -> f64 {
        self.rows.iter().map(|r| r.min_u).fold(f64::INFINITY, f64::min)
    }

    pub fn min_v(&self) -> f64 {
        self.rows.iter().map(|r| r.min_v).fold(f64::INFINITY, f64::min)
    }

    pub fn min_m(&self) -> f64 {
        self.rows.iter().map(|r| r.min_m).fold(f64::INFINITY, f64::min)
    }

    /// `None` when no row carries s.
    pub fn min_s(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.min_s).reduce(f64::min)
    }
}

/// Runs `sim` to `steps` and records minima at every level including the first.
pub fn track_minima(sim: &mut Simulation, steps: usize) -> Result<MinimaSeries> {
    let mut series = MinimaSeries::default();
    series.record(&sim.view());
    for _ in 0..steps {
        sim.step()?;
        series.record(&sim.view());
    }
    Ok(series)
}

/// Running a-priori-bound diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessReport {
    pub v0_sup: f64,
    pub max_v_sup: f64,
    pub max_m_l2: f64,
    /// Δt Σ ‖m^n‖²_{H¹} (full norm)
    pub m_h1_sq_sum: f64,
    /// Δt Σ ‖(m^n − m^{n−1})/Δt‖²_{L²}
    pub dm_l2_sq_sum: f64,
    /// max_n max_j v^n_j exceeded max_j v⁰_j by more than 1e-14
    pub v_sup_violated: bool,
    /// node-steps where v^n_j > v^{n−1}_j
    pub v_increase_count: usize,
    /// node-steps where v increased although m^n_j ≥ 0
    pub v_increase_with_nonneg_m: usize,
    pub all_finite: bool,
    pub steps: usize,
}

pub struct BoundednessTracker {
    space: Arc<FeSpace>,
    dt: f64,
    report: BoundednessReport,
    prev_v: FeScalarField,
    prev_m: FeScalarField,
}

impl BoundednessTracker {
    pub fn new(space: Arc<FeSpace>, dt: f64, initial: &StateView<'_>) -> Result<Self> {
        let v0_sup = initial.v.max();
        let report = BoundednessReport {
            v0_sup,
            max_v_sup: v0_sup,
            max_m_l2: space.l2_norm(initial.m)?,
            m_h1_sq_sum: 0.0,
            dm_l2_sq_sum: 0.0,
            v_sup_violated: false,
            v_increase_count: 0,
            v_increase_with_nonneg_m: 0,
            all_finite: true,
            steps: 0,
        };
        Ok(Self { space, dt, report, prev_v: initial.v.clone(), prev_m: initial.m.clone() })
    }

    pub fn record(&mut self, state: &StateView<'_>) -> Result<()> {
        let r = &mut self.report;
        let sp = &self.space;
        r.steps += 1;
        r.max_v_sup = r.max_v_sup.max(state.v.max());
        if state.v.max() > r.v0_sup + 1e-14 {
            r.v_sup_violated = true;
        }
        let m_l2 = sp.l2_norm(state.m)?;
        r.max_m_l2 = r.max_m_l2.max(m_l2);
        r.m_h1_sq_sum += self.dt * (m_l2 * m_l2 + sp.h1_seminorm(state.m)?.powi(2));
        let dm = sp.l2_error(state.m, &self.prev_m)? / self.dt;
        r.dm_l2_sq_sum += self.dt * dm * dm;
        for ((&vn, &vo), &m) in state.v.values().iter().zip(self.prev_v.values()).zip(state.m.values()) {
            if vn > vo {
                r.v_increase_count += 1;
                if m >= 0.0 {
                    r.v_increase_with_nonneg_m += 1;
                }
            }
        }
        r.all_finite &= [r.max_v_sup, r.max_m_l2, r.m_h1_sq_sum, r.dm_l2_sq_sum].iter().all(|x| x.is_finite());
        self.prev_v = state.v.clone();
        self.prev_m = state.m.clone();
        Ok(())
    }

    pub fn report(&self) -> &BoundednessReport {
        &self.report
    }
}

/// Evaluates a P1 field at every vertex of `target`, which must lie inside the
/// source mesh. Exact when `target` is a refinement of the source mesh.
pub fn prolong(field: &FeScalarField, target: &Arc<TriMesh>) -> Result<FeScalarField> {
    let locator = PointLocator::new(field.mesh());
    let mut out = Vec::with_capacity(target.num_vertices());
    for (j, p) in target.vertices().iter().enumerate() {
        let (e, bary) = locator.locate(*p).ok_or_else(|| {
            Error::InvalidArgument(format!("vertex {j} ({}, {}) lies outside the coarse mesh", p[0], p[1]))
        })?;
        out.push(field.eval(e, &bary));
    }
    FeScalarField::new(target.clone(), out)
}

pub fn prolong_vector(field: &FeVectorField, target: &Arc<TriMesh>) -> Result<FeVectorField> {
    let x = prolong(&field.component(0), target)?;
    let y = prolong(&field.component(1), target)?;
    FeVectorField::from_components(&x, &y)
}

/// One refinement level (n subdivisions, time step).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub n: usize,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub scheme: SchemeKind,
    pub setup: ProblemSetup,
    pub levels: Vec<Level>,
    pub reference: Level,
    pub t_check: f64,
    pub cg: CgOptions,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub level: usize,
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub e_u_l2: f64,
    pub e_v_l2: f64,
    pub e_m_l2: f64,
    /// absent for the transformed-variable scheme
    pub e_sigma_l2: Option<f64>,
    pub e_u_h1: f64,
    pub e_m_h1: f64,
    pub order_u: Option<f64>,
    pub order_v: Option<f64>,
    pub order_m: Option<f64>,
    pub order_sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

fn order(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0).then(|| (coarse / fine).log2())
}

impl ErrorTable {
    /// Observed orders of an arbitrary error column between consecutive rows.
    pub fn orders(&self, column: impl Fn(&ErrorRow) -> Option<f64>) -> Vec<Option<f64>> {
        self.rows
            .windows(2)
            .map(|w| match (column(&w[0]), column(&w[1])) {
                (Some(a), Some(b)) => order(a, b),
                _ => None,
            })
            .collect()
    }
}

/// Fields of one run at the check time.
struct Solution {
    mesh: Arc<TriMesh>,
    u: FeScalarField,
    v: FeScalarField,
    m: FeScalarField,
    sigma: Option<FeVectorField>,
}

fn solve_to(
    scheme: SchemeKind,
    setup: &ProblemSetup,
    level: Level,
    t_check: f64,
    cg: CgOptions,
    threads: usize,
    projection: InitialProjection,
) -> Result<Solution> {
    let time = TimeConfig::new(level.dt, t_check)?;
    let mesh = Arc::new(TriMesh::unit_square(level.n)?);
    let space = Arc::new(FeSpace::new(mesh.clone()).with_threads(threads)?);
    let mut sim = Simulation::new(scheme, space, setup, level.dt, cg, projection)?;
    for _ in 0..time.steps {
        sim.step()?;
    }
    let v = sim.view();
    Ok(Solution { mesh, u: v.u.clone(), v: v.v.clone(), m: v.m.clone(), sigma: v.sigma.cloned() })
}

fn validate_levels(levels: &[Level], reference: Level) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("convergence study needs at least one level".into()));
    }
    for w in levels.windows(2) {
        let halved_dt = (w[1].dt * 2.0 - w[0].dt).abs() <= 1e-12 * w[0].dt;
        if w[1].n != 2 * w[0].n || !halved_dt {
            return Err(Error::InvalidArgument(format!(
                "levels must halve both h and dt: ({}, {}) -> ({}, {})",
                w[0].n, w[0].dt, w[1].n, w[1].dt
            )));
        }
    }
    for l in levels {
        if reference.n % l.n != 0 {
            return Err(Error::InvalidArgument(format!(
                "reference n = {} is not a refinement of level n = {}",
                reference.n, l.n
            )));
        }
        if reference.dt > l.dt * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "reference dt = {} is coarser than level dt = {}",
                reference.dt, l.dt
            )));
        }
    }
    Ok(())
}

/// Errors of each level against a fine self-reference at `t_check`.
///
/// Every run starts from the elliptic projection of u₀. Coarse fields are
/// evaluated at the reference vertices and measured with the reference
/// Gram matrices.
pub fn convergence_study(cfg: &ConvergenceConfig) -> Result<ErrorTable> {
    validate_levels(&cfg.levels, cfg.reference)?;
    let projection = InitialProjection::Elliptic;
    let reference = solve_to(cfg.scheme, &cfg.setup, cfg.reference, cfg.t_check, cfg.cg, cfg.threads, projection)?;
    let ref_space = FeSpace::new(reference.mesh.clone());
    let mut table = ErrorTable::default();
    for (k, &level) in cfg.levels.iter().enumerate() {
        log::info!("convergence level {k}: n = {}, dt = {}", level.n, level.dt);
        let sol = solve_to(cfg.scheme, &cfg.setup, level, cfg.t_check, cfg.cg, cfg.threads, projection)?;
        let u = prolong(&sol.u, &reference.mesh)?;
        let v = prolong(&sol.v, &reference.mesh)?;
        let m = prolong(&sol.m, &reference.mesh)?;
        let e_sigma = match (&sol.sigma, &reference.sigma) {
            (Some(s), Some(r)) => {
                let s = prolong_vector(s, &reference.mesh)?;
                let ex = ref_space.l2_error(&s.component(0), &r.component(0))?;
                let ey = ref_space.l2_error(&s.component(1), &r.component(1))?;
                Some(ex.hypot(ey))
            }
            _ => None,
        };
        table.rows.push(ErrorRow {
            level: k,
            n: level.n,
            h: sol.mesh.h(),
            dt: level.dt,
            e_u_l2: ref_space.l2_error(&u, &reference.u)?,
            e_v_l2: ref_space.l2_error(&v, &reference.v)?,
            e_m_l2: ref_space.l2_error(&m, &reference.m)?,
            e_sigma_l2: e_sigma,
            e_u_h1: ref_space.h1_error(&u, &reference.u)?,
            e_m_h1: ref_space.h1_error(&m, &reference.m)?,
            order_u: None,
            order_v: None,
            order_m: None,
            order_sigma: None,
        });
    }
    for k in 1..table.rows.len() {
        let (a, b) = (table.rows[k - 1].clone(), &mut table.rows[k]);
        b.order_u = order(a.e_u_l2, b.e_u_l2);
        b.order_v = order(a.e_v_l2, b.e_v_l2);
        b.order_m = order(a.e_m_l2, b.e_m_l2);
        b.order_sigma = match (a.e_sigma_l2, b.e_sigma_l2) {
            (Some(x), Some(y)) => order(x, y),
            _ => None,
        };
    }
    Ok(table)
}

/// L² distances between the two schemes' fields at the same time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeDistance {
    pub n: usize,
    pub dt: f64,
    pub u: f64,
    pub v: f64,
    pub m: f64,
}

pub fn cross_scheme_diff(setup: &ProblemSetup, level: Level, t_check: f64, cg: CgOptions, threads: usize) -> Result<SchemeDistance> {
    let time = TimeConfig::new(level.dt, t_check)?;
    let mesh = Arc::new(TriMesh::unit_square(level.n)?);
    let space = Arc::new(FeSpace::new(mesh).with_threads(threads)?);
    let mut a = Simulation::new(SchemeKind::UvmSigma, space.clone(), setup, level.dt, cg, InitialProjection::Nodal)?;
    let mut b = Simulation::new(SchemeKind::Uvms, space.clone(), setup, level.dt, cg, InitialProjection::Nodal)?;
    for _ in 0..time.steps {
        a.step()?;
        b.step()?;
    }
    let (x, y) = (a.view(), b.view());
    Ok(SchemeDistance {
        n: level.n,
        dt: level.dt,
        u: space.l2_error(x.u, y.u)?,
        v: space.l2_error(x.v, y.v)?,
        m: space.l2_error(x.m, y.m)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{test1_setup, zero_setup};

    #[test]
    fn prolongation_to_nested_mesh_is_exact() {
        let coarse = Arc::new(TriMesh::unit_square(4).unwrap());
        let fine = Arc::new(TriMesh::unit_square(16).unwrap());
        let f = FeScalarField::interpolate(coarse.clone(), |x, y| (5.0 * x).sin() * y.exp()).unwrap();
        let g = prolong(&f, &fine).unwrap();
        for e in 0..fine.num_triangles() {
            let c = fine.point_at(e, &[1.0 / 3.0; 3]);
            let (ec, bc) = PointLocator::new(&coarse).locate(c).unwrap();
            assert!((g.eval(e, &[1.0 / 3.0; 3]) - f.eval(ec, &bc)).abs() < 1e-14);
        }
        let same = prolong(&f, &coarse).unwrap();
        for (a, b) in same.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_run_has_zero_minima_and_diagnostics() {
        let space = Arc::new(FeSpace::new(Arc::new(TriMesh::unit_square(4).unwrap())));
        let mut sim = Simulation::new(SchemeKind::Uvms, space.clone(), &zero_setup(0.0), 0.01, CgOptions::default(), InitialProjection::Nodal).unwrap();
        let mut tracker = BoundednessTracker::new(space, 0.01, &sim.view()).unwrap();
        let mut minima = MinimaSeries::default();
        minima.record(&sim.view());
        for _ in 0..4 {
            sim.step().unwrap();
            minima.record(&sim.view());
            tracker.record(&sim.view()).unwrap();
        }
        assert_eq!(minima.rows.len(), 5);
        assert!(minima.rows.iter().all(|r| r.min_u == 0.0 && r.min_v == 0.0 && r.min_m == 0.0 && r.min_s == Some(0.0)));
        let r = tracker.report();
        assert_eq!((r.max_v_sup, r.max_m_l2, r.m_h1_sq_sum, r.dm_l2_sq_sum), (0.0, 0.0, 0.0, 0.0));
        assert!(!r.v_sup_violated && r.all_finite);
    }

    #[test]
    fn identical_level_and_reference_give_zero_error() {
        let cfg = ConvergenceConfig {
            scheme: SchemeKind::UvmSigma,
            setup: test1_setup(0.0),
            levels: vec![Level { n: 4, dt: 0.05 }],
            reference: Level { n: 4, dt: 0.05 },
            t_check: 0.1,
            cg: CgOptions::with_tol(1e-12),
            threads: 0,
        };
        let table = convergence_study(&cfg).unwrap();
        let r = &table.rows[0];
        assert_eq!((r.e_u_l2, r.e_v_l2, r.e_m_l2, r.e_u_h1, r.e_m_h1), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(r.e_sigma_l2, Some(0.0));
    }

    #[test]
    fn non_halving_levels_are_refused() {
        let lv = |n, dt| Level { n, dt };
        assert!(validate_levels(&[lv(8, 0.04), lv(16, 0.02)], lv(32, 0.01)).is_ok());
        assert!(validate_levels(&[lv(8, 0.04), lv(12, 0.02)], lv(48, 0.01)).is_err());
        assert!(validate_levels(&[lv(8, 0.04), lv(16, 0.03)], lv(32, 0.01)).is_err());
        assert!(validate_levels(&[lv(8, 0.04)], lv(12, 0.01)).is_err());
        assert!(validate_levels(&[lv(8, 0.04)], lv(16, 0.08)).is_err());
        assert!(validate_levels(&[], lv(16, 0.01)).is_err());
    }

    #[test]
    fn zero_data_schemes_coincide() {
        let d = cross_scheme_diff(&zero_setup(0.0), Level { n: 4, dt: 0.05 }, 0.1, CgOptions::default(), 0).unwrap();
        assert_eq!((d.u, d.v, d.m), (0.0, 0.0, 0.0));
    }

    #[test]
    fn table_orders() {
        let row = |e: f64| ErrorRow {
            level: 0, n: 1, h: 1.0, dt: 1.0, e_u_l2: e, e_v_l2: e, e_m_l2: e, e_sigma_l2: None,
            e_u_h1: e, e_m_h1: e, order_u: None, order_v: None, order_m: None, order_sigma: None,
        };
        let t = ErrorTable { rows: vec![row(4.0), row(2.0), row(0.5)] };
        assert_eq!(t.orders(|r| Some(r.e_u_h1)), vec![Some(1.0), Some(2.0)]);
        assert_eq!(t.orders(|r| r.e_sigma_l2), vec![None, None]);
    }
}
