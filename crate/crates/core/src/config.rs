//! Run configuration: defaults, `key = value` files and command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CgOptions;
use crate::params::TimeConfig;
use crate::problems::ProblemKind;
use crate::scheme::SchemeKind;

pub const KEYS: [&str; 11] =
    ["scheme", "problem", "mu_u", "n", "dt", "t_end", "snapshots", "out", "tol", "jacobi", "mesh_file"];
pub const DEFAULT_SNAPSHOTS: [f64; 4] = [1.0, 5.0, 10.0, 15.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scheme: SchemeKind,
    pub problem: ProblemKind,
    pub mu_u: f64,
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    pub out: PathBuf,
    pub tol: f64,
    /// Diagonally preconditioned CG.
    pub jacobi: bool,
    /// `None` means the generated unit-square mesh.
    pub mesh_file: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::UvmSigma,
            problem: ProblemKind::Test1,
            mu_u: 0.0,
            n: 50,
            dt: 0.01,
            t_end: 15.0,
            snapshots: DEFAULT_SNAPSHOTS.to_vec(),
            out: PathBuf::from("out"),
            tol: 1e-10,
            jacobi: false,
            mesh_file: None,
        }
    }
}

/// Unvalidated `key -> value` pairs; later layers override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

fn normalize_key(key: &str) -> Result<String> {
    let k = key.trim().replace('-', "_");
    if KEYS.contains(&k.as_str()) {
        Ok(k)
    } else {
        Err(Error::config(key.trim(), "unknown key"))
    }
}

impl RawConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(line, format!("line {}: expected `key = value`", i + 1)))?;
            raw.set(k, v.trim())?;
        }
        Ok(raw)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        self.entries.insert(normalize_key(key)?, value.into());
        Ok(())
    }

    pub fn merge(&mut self, other: &RawConfig) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::config(key, format!("malformed value `{v}`")))
}

/// Resolves defaults, then `file`, then `flags`, and validates the result.
pub fn parse_config(flags: &RawConfig, file: Option<&Path>) -> Result<RunConfig> {
    let mut raw = match file {
        Some(p) => RawConfig::read(p)?,
        None => RawConfig::default(),
    };
    raw.merge(flags);
    RunConfig::from_raw(&raw)
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let mut c = RunConfig::default();
        if let Some(v) = raw.get("scheme") {
            c.scheme = v.parse().map_err(|e: Error| Error::config("scheme", e.to_string()))?;
        }
        if let Some(v) = raw.get("problem") {
            c.problem = v.parse().map_err(|e: Error| Error::config("problem", e.to_string()))?;
        }
        if let Some(v) = raw.get("mu_u") {
            c.mu_u = parse_num("mu_u", v)?;
        }
        if let Some(v) = raw.get("n") {
            c.n = parse_num("n", v)?;
        }
        if let Some(v) = raw.get("dt") {
            c.dt = parse_num("dt", v)?;
        }
        if let Some(v) = raw.get("t_end") {
            c.t_end = parse_num("t_end", v)?;
        }
        if let Some(v) = raw.get("out") {
            c.out = PathBuf::from(v);
        }
        if let Some(v) = raw.get("tol") {
            c.tol = parse_num("tol", v)?;
        }
        if let Some(v) = raw.get("jacobi") {
            c.jacobi = parse_num("jacobi", v)?;
        }
        if let Some(v) = raw.get("mesh_file") {
            c.mesh_file = (!v.is_empty()).then(|| PathBuf::from(v));
        }
        let explicit = match raw.get("snapshots") {
            Some(v) => {
                c.snapshots = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_num("snapshots", s))
                    .collect::<Result<_>>()?;
                true
            }
            None => false,
        };

        if !(c.dt.is_finite() && c.dt > 0.0) {
            return Err(Error::config("dt", format!("must be positive, got {}", c.dt)));
        }
        if !(c.t_end.is_finite() && c.t_end > 0.0) {
            return Err(Error::config("t_end", format!("must be positive, got {}", c.t_end)));
        }
        TimeConfig::new(c.dt, c.t_end).map_err(|e| Error::config("t_end", e.to_string()))?;
        if c.n == 0 && c.mesh_file.is_none() {
            return Err(Error::config("n", "must be at least 1"));
        }
        if !(c.mu_u.is_finite() && c.mu_u >= 0.0) {
            return Err(Error::config("mu_u", format!("must be nonnegative, got {}", c.mu_u)));
        }
        if !(c.tol.is_finite() && c.tol > 0.0) {
            return Err(Error::config("tol", format!("must be positive, got {}", c.tol)));
        }
        let in_range = |t: &f64| t.is_finite() && *t >= 0.0 && *t <= c.t_end + 0.5 * c.dt;
        if explicit {
            if let Some(t) = c.snapshots.iter().find(|t| !in_range(t)) {
                return Err(Error::config("snapshots", format!("time {t} outside [0, {}]", c.t_end)));
            }
        } else {
            let t_end = c.t_end;
            let dt = c.dt;
            c.snapshots.retain(|t| *t >= 0.0 && *t <= t_end + 0.5 * dt);
        }
        Ok(c)
    }

    pub fn cg(&self) -> CgOptions {
        CgOptions { jacobi: self.jacobi, ..CgOptions::with_tol(self.tol) }
    }

    pub fn time(&self) -> TimeConfig {
        TimeConfig::new(self.dt, self.t_end).expect("validated")
    }
}
