//! High-level entry points used by the command-line tool.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fem::FeSpace;
use crate::io::{write_diagnostics, write_distances, write_errors, write_minima, write_vtk, VtkFields};
use crate::linalg::CgOptions;
use crate::mesh::TriMesh;
use crate::params::Sensitivity;
use crate::problems::{ProblemKind, ProblemSetup};
use crate::scheme::{InitialProjection, SchemeKind, Simulation};
use crate::verification::{
    convergence_study, cross_scheme_diff, BoundednessReport, BoundednessTracker, ConvergenceConfig, ErrorTable,
    Level, MinimaSeries, SchemeDistance,
};

pub const THREADS_ENV: &str = "HAPTOFEM_THREADS";

/// Worker count from the environment; unset or empty means 0 (sequential).
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Error::config(THREADS_ENV, format!("malformed value `{v}`"))),
        _ => Ok(0),
    }
}

#[derive(Debug, Clone, Serialize)]
struct ParamsRecord {
    d_u: f64,
    d_m: f64,
    alpha: f64,
    rho_m: f64,
    mu_m: f64,
    mu_u: f64,
    chi: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct SnapshotRecord {
    requested: f64,
    step: usize,
    time: f64,
    file: String,
}

#[derive(Debug, Clone, Serialize)]
struct MeshRecord {
    source: String,
    vertices: usize,
    triangles: usize,
    h: f64,
    nonobtuse: bool,
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    version: &'static str,
    config: &'a RunConfig,
    params: ParamsRecord,
    mesh: MeshRecord,
    steps: usize,
    threads: usize,
    quadrature_degree: u32,
    initial_u: InitialProjection,
    snapshots: Vec<SnapshotRecord>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub minima: MinimaSeries,
    pub diagnostics: BoundednessReport,
    pub snapshot_files: Vec<PathBuf>,
}

fn load_mesh(cfg: &RunConfig) -> Result<(Arc<TriMesh>, String)> {
    match &cfg.mesh_file {
        Some(p) => Ok((Arc::new(TriMesh::read(p)?), p.display().to_string())),
        None => Ok((Arc::new(TriMesh::unit_square(cfg.n)?), format!("unit_square({})", cfg.n))),
    }
}

fn write_snapshot(dir: &Path, sim: &Simulation, file: &str) -> Result<PathBuf> {
    let view = sim.view();
    let mut fields = VtkFields::default();
    fields.scalars.push(("u", view.u));
    fields.scalars.push(("v", view.v));
    fields.scalars.push(("m", view.m));
    if let Some(s) = view.s {
        fields.scalars.push(("s", s));
    }
    if let Some(sigma) = view.sigma {
        fields.vectors.push(("sigma", sigma));
    }
    let path = dir.join(file);
    let title = format!("{} step {} time {}", sim.kind(), view.step, view.time);
    write_vtk(&path, view.u.mesh(), &fields, &title)?;
    Ok(path)
}

/// Runs one simulation and writes snapshots, `minima.csv`,
/// `diagnostics.csv` and `run.json` into `cfg.out`.
pub fn run_simulation(cfg: &RunConfig, threads: usize) -> Result<RunSummary> {
    std::fs::create_dir_all(&cfg.out)?;
    let time = cfg.time();
    let (mesh, source) = load_mesh(cfg)?;
    if !mesh.is_nonobtuse() {
        log::warn!("mesh has obtuse triangles; discrete positivity is not guaranteed");
    }
    let space = Arc::new(FeSpace::new(mesh.clone()).with_threads(threads)?);
    let setup = ProblemSetup::new(cfg.problem, cfg.mu_u);
    let cg = cfg.cg();
    let projection = InitialProjection::Nodal;
    let mut sim = Simulation::new(cfg.scheme, space.clone(), &setup, cfg.dt, cg, projection)?;

    let mut snaps: Vec<(f64, usize)> = cfg.snapshots.iter().map(|&t| (t, time.nearest_step(t))).collect();
    snaps.sort_by_key(|s| s.1);
    let mut records = Vec::new();
    let mut files = Vec::new();
    let take = |sim: &Simulation, records: &mut Vec<SnapshotRecord>, files: &mut Vec<PathBuf>| -> Result<()> {
        let step = sim.step_index();
        for &(requested, _) in snaps.iter().filter(|s| s.1 == step) {
            let file = format!("snapshot_{step:06}.vtk");
            if !files.iter().any(|f: &PathBuf| f.ends_with(&file)) {
                files.push(write_snapshot(&cfg.out, sim, &file)?);
            }
            records.push(SnapshotRecord { requested, step, time: sim.time(), file });
        }
        Ok(())
    };

    let mut minima = MinimaSeries::default();
    minima.record(&sim.view());
    let mut tracker = BoundednessTracker::new(space.clone(), cfg.dt, &sim.view())?;
    take(&sim, &mut records, &mut files)?;
    for _ in 0..time.steps {
        sim.step()?;
        let view = sim.view();
        minima.record(&view);
        tracker.record(&view)?;
        take(&sim, &mut records, &mut files)?;
    }
    write_minima(cfg.out.join("minima.csv"), &minima)?;
    let diagnostics = tracker.report().clone();
    write_diagnostics(cfg.out.join("diagnostics.csv"), &diagnostics)?;

    let p = &setup.params;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        params: ParamsRecord {
            d_u: p.d_u,
            d_m: p.d_m,
            alpha: p.alpha,
            rho_m: p.rho_m,
            mu_m: p.mu_m,
            mu_u: p.mu_u,
            chi: match p.sensitivity {
                Sensitivity::Constant(c) => Some(c),
                Sensitivity::Custom { .. } => None,
            },
        },
        mesh: MeshRecord {
            source,
            vertices: mesh.num_vertices(),
            triangles: mesh.num_triangles(),
            h: mesh.h(),
            nonobtuse: mesh.is_nonobtuse(),
        },
        steps: time.steps,
        threads,
        quadrature_degree: space.rule().degree(),
        initial_u: projection,
        snapshots: records,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    std::fs::write(cfg.out.join("run.json"), json + "\n")?;
    Ok(RunSummary { minima, diagnostics, snapshot_files: files })
}

/// Parses `n:dt` pairs separated by commas.
pub fn parse_levels(text: &str) -> Result<Vec<Level>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (n, dt) = s
                .split_once(':')
                .ok_or_else(|| Error::config("levels", format!("expected `n:dt`, got `{s}`")))?;
            let n = n.trim().parse().map_err(|_| Error::config("levels", format!("bad n in `{s}`")))?;
            let dt = dt.trim().parse().map_err(|_| Error::config("levels", format!("bad dt in `{s}`")))?;
            Ok(Level { n, dt })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ConvergeArgs {
    pub scheme: SchemeKind,
    pub problem: ProblemKind,
    pub mu_u: f64,
    pub levels: Vec<Level>,
    pub reference: Level,
    pub t_check: f64,
    pub cg: CgOptions,
    pub out: PathBuf,
}

/// Refinement study; writes `errors.csv` into `args.out`.
pub fn converge(args: &ConvergeArgs, threads: usize) -> Result<ErrorTable> {
    std::fs::create_dir_all(&args.out)?;
    let cfg = ConvergenceConfig {
        scheme: args.scheme,
        setup: ProblemSetup::new(args.problem, args.mu_u),
        levels: args.levels.clone(),
        reference: args.reference,
        t_check: args.t_check,
        cg: args.cg,
        threads,
    };
    let table = convergence_study(&cfg)?;
    write_errors(args.out.join("errors.csv"), &table)?;
    Ok(table)
}

/// Scheme-to-scheme distances at (n, dt) and (2n, dt/2); writes `compare.csv`.
pub fn compare(
    problem: ProblemKind,
    mu_u: f64,
    level: Level,
    t_check: f64,
    cg: CgOptions,
    out: &Path,
    threads: usize,
) -> Result<Vec<SchemeDistance>> {
    std::fs::create_dir_all(out)?;
    let setup = ProblemSetup::new(problem, mu_u);
    let fine = Level { n: 2 * level.n, dt: level.dt / 2.0 };
    let rows = vec![
        cross_scheme_diff(&setup, level, t_check, cg, threads)?,
        cross_scheme_diff(&setup, fine, t_check, cg, threads)?,
    ];
    write_distances(out.join("compare.csv"), &rows)?;
    Ok(rows)
}
