use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use haptofem::config::{parse_config, RawConfig};
use haptofem::driver::{self, parse_levels, ConvergeArgs};
use haptofem::verification::Level;
use haptofem::{CgOptions, ProblemKind, SchemeKind, TriMesh};

#[derive(Parser)]
#[command(name = "haptofem", version, about = "Haptotaxis tumour-invasion finite-element simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a structured unit-square mesh in the plain-text mesh format.
    MeshGen {
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value = "mesh.txt")]
        out: PathBuf,
    },
    /// Run one simulation and write snapshots and tables.
    Run(RunArgs),
    /// Refinement study against a fine reference run.
    Converge {
        #[arg(long, default_value = "uvmsigma")]
        scheme: SchemeKind,
        #[arg(long, default_value = "test1")]
        problem: ProblemKind,
        #[arg(long = "mu-u", default_value_t = 0.0)]
        mu_u: f64,
        /// Comma-separated `n:dt` pairs, each halving the previous.
        #[arg(long, default_value = "8:0.04,16:0.02,32:0.01")]
        levels: String,
        #[arg(long, default_value = "128:0.0025")]
        reference: String,
        #[arg(long = "t-check", default_value_t = 1.0)]
        t_check: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Diagonally preconditioned CG.
        #[arg(long)]
        jacobi: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Distance between the two schemes at n and 2n.
    Compare {
        #[arg(long, default_value = "test1")]
        problem: ProblemKind,
        #[arg(long = "mu-u", default_value_t = 0.0)]
        mu_u: f64,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long = "t-check", default_value_t = 1.0)]
        t_check: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Diagonally preconditioned CG.
        #[arg(long)]
        jacobi: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long = "mu-u")]
    mu_u: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long = "t-end")]
    t_end: Option<String>,
    /// Comma-separated times.
    #[arg(long)]
    snapshots: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// Diagonally preconditioned CG.
    #[arg(long)]
    jacobi: bool,
    #[arg(long = "mesh-file")]
    mesh_file: Option<String>,
}

impl RunArgs {
    fn flags(&self) -> haptofem::Result<RawConfig> {
        let mut raw = RawConfig::default();
        let pairs = [
            ("scheme", &self.scheme),
            ("problem", &self.problem),
            ("mu_u", &self.mu_u),
            ("n", &self.n),
            ("dt", &self.dt),
            ("t_end", &self.t_end),
            ("snapshots", &self.snapshots),
            ("out", &self.out),
            ("tol", &self.tol),
            ("mesh_file", &self.mesh_file),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                raw.set(k, v.clone())?;
            }
        }
        if self.jacobi {
            raw.set("jacobi", "true")?;
        }
        Ok(raw)
    }
}

fn one_level(text: &str) -> haptofem::Result<Level> {
    let mut l = parse_levels(text)?;
    if l.len() != 1 {
        return Err(haptofem::Error::config("reference", "expected a single `n:dt` pair"));
    }
    Ok(l.remove(0))
}

fn execute(cli: Cli) -> haptofem::Result<()> {
    let threads = driver::threads_from_env()?;
    match cli.command {
        Command::MeshGen { n, out } => {
            let mesh = TriMesh::unit_square(n)?;
            mesh.write(&out)?;
            println!("wrote {} ({} vertices, {} triangles)", out.display(), mesh.num_vertices(), mesh.num_triangles());
        }
        Command::Run(args) => {
            let cfg = parse_config(&args.flags()?, args.config.as_deref())?;
            let summary = driver::run_simulation(&cfg, threads)?;
            let m = &summary.minima;
            println!(
                "{} {} steps={} min_u={:e} min_v={:e} min_m={:e}{}",
                cfg.scheme,
                cfg.problem,
                summary.diagnostics.steps,
                m.min_u(),
                m.min_v(),
                m.min_m(),
                m.min_s().map(|s| format!(" min_s={s:e}")).unwrap_or_default()
            );
            println!("outputs in {}", cfg.out.display());
        }
        Command::Converge { scheme, problem, mu_u, levels, reference, t_check, tol, jacobi, out } => {
            let args = ConvergeArgs {
                scheme,
                problem,
                mu_u,
                levels: parse_levels(&levels)?,
                reference: one_level(&reference)?,
                t_check,
                cg: CgOptions { jacobi, ..CgOptions::with_tol(tol) },
                out,
            };
            let table = driver::converge(&args, threads)?;
            for r in &table.rows {
                println!(
                    "n={:<4} dt={:<8} e_u={:.3e} e_v={:.3e} e_m={:.3e} order_u={}",
                    r.n,
                    r.dt,
                    r.e_u_l2,
                    r.e_v_l2,
                    r.e_m_l2,
                    r.order_u.map(|o| format!("{o:.2}")).unwrap_or_else(|| "-".into())
                );
            }
        }
        Command::Compare { problem, mu_u, n, dt, t_check, tol, jacobi, out } => {
            let rows = driver::compare(problem, mu_u, Level { n, dt }, t_check, CgOptions { jacobi, ..CgOptions::with_tol(tol) }, &out, threads)?;
            for r in &rows {
                println!("n={:<4} dt={:<8} |du|={:.3e} |dv|={:.3e} |dm|={:.3e}", r.n, r.dt, r.u, r.v, r.m);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
