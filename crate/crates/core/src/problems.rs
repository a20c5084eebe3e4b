//! Experiment setups: coefficients and initial data.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelParams, Sensitivity};

pub type ScalarData = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type VectorData = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// Initial tumour blob and its gradient.
const BLOB_CENTER: [f64; 2] = [0.5, 0.5];
const BLOB_SHARPNESS: f64 = 400.0;

/// Matrix holes of the heterogeneous setup: (x-rate, y-rate, center).
pub const MATRIX_BUMPS: [(f64, f64, [f64; 2]); 7] = [
    (800.0, 100.0, [0.2, 0.2]),
    (800.0, 100.0, [0.5, 0.1]),
    (600.0, 200.0, [0.3, 0.5]),
    (600.0, 200.0, [0.6, 0.7]),
    (600.0, 200.0, [0.8, 0.2]),
    (400.0, 300.0, [0.5, 0.9]),
    (100.0, 50.0, [0.8, 0.7]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    /// homogeneous matrix
    Test1,
    /// heterogeneous matrix
    Test2,
    /// all fields zero, for debugging
    Zero,
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "test1" => Ok(Self::Test1),
            "test2" => Ok(Self::Test2),
            "zero" => Ok(Self::Zero),
            other => Err(Error::InvalidArgument(format!("unknown problem `{other}` (test1, test2, zero)"))),
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Test1 => "test1",
            Self::Test2 => "test2",
            Self::Zero => "zero",
        })
    }
}

#[derive(Clone)]
pub struct ProblemSetup {
    pub name: String,
    pub params: ModelParams,
    pub u0: ScalarData,
    /// Needed only for the elliptic projection of u₀.
    pub grad_u0: Option<VectorData>,
    pub v0: ScalarData,
    pub m0: ScalarData,
    /// Exact gradient of the unclamped v₀ formula.
    pub sigma0: VectorData,
    /// Clamp negative nodal values of v₀ to zero after interpolation.
    pub clamp_negative_v0: bool,
}

impl fmt::Debug for ProblemSetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSetup")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("clamp_negative_v0", &self.clamp_negative_v0)
            .finish_non_exhaustive()
    }
}

impl ProblemSetup {
    pub fn new(kind: ProblemKind, mu_u: f64) -> Self {
        match kind {
            ProblemKind::Test1 => test1_setup(mu_u),
            ProblemKind::Test2 => test2_setup(mu_u),
            ProblemKind::Zero => zero_setup(mu_u),
        }
    }
}

pub fn default_params(mu_u: f64) -> ModelParams {
    ModelParams {
        d_u: 0.001,
        d_m: 0.001,
        alpha: 10.0,
        rho_m: 0.0,
        mu_m: 0.1,
        mu_u,
        sensitivity: Sensitivity::Constant(0.005),
    }
}

pub fn blob(x: f64, y: f64) -> f64 {
    let (dx, dy) = (x - BLOB_CENTER[0], y - BLOB_CENTER[1]);
    (-BLOB_SHARPNESS * (dx * dx + dy * dy)).exp()
}

pub fn blob_gradient(x: f64, y: f64) -> [f64; 2] {
    let b = blob(x, y);
    [-2.0 * BLOB_SHARPNESS * (x - BLOB_CENTER[0]) * b, -2.0 * BLOB_SHARPNESS * (y - BLOB_CENTER[1]) * b]
}

pub fn test1_setup(mu_u: f64) -> ProblemSetup {
    ProblemSetup {
        name: "test1".into(),
        params: default_params(mu_u),
        u0: Arc::new(blob),
        grad_u0: Some(Arc::new(blob_gradient)),
        v0: Arc::new(|x, y| 1.0 - blob(x, y)),
        m0: Arc::new(|x, y| 0.5 * blob(x, y)),
        sigma0: Arc::new(|x, y| {
            let g = blob_gradient(x, y);
            [-g[0], -g[1]]
        }),
        clamp_negative_v0: false,
    }
}

/// Unclamped heterogeneous matrix density.
pub fn bumpy_matrix(x: f64, y: f64) -> f64 {
    1.0 - MATRIX_BUMPS
        .iter()
        .map(|&(b, c, p)| (-b * (x - p[0]).powi(2) - c * (y - p[1]).powi(2)).exp())
        .sum::<f64>()
}

pub fn bumpy_matrix_gradient(x: f64, y: f64) -> [f64; 2] {
    let mut g = [0.0; 2];
    for &(b, c, p) in &MATRIX_BUMPS {
        let e = (-b * (x - p[0]).powi(2) - c * (y - p[1]).powi(2)).exp();
        g[0] += 2.0 * b * (x - p[0]) * e;
        g[1] += 2.0 * c * (y - p[1]) * e;
    }
    g
}

pub fn test2_setup(mu_u: f64) -> ProblemSetup {
    ProblemSetup {
        name: "test2".into(),
        v0: Arc::new(bumpy_matrix),
        sigma0: Arc::new(bumpy_matrix_gradient),
        clamp_negative_v0: true,
        ..test1_setup(mu_u)
    }
}

pub fn zero_setup(mu_u: f64) -> ProblemSetup {
    ProblemSetup {
        name: "zero".into(),
        params: default_params(mu_u),
        u0: Arc::new(|_, _| 0.0),
        grad_u0: Some(Arc::new(|_, _| [0.0, 0.0])),
        v0: Arc::new(|_, _| 0.0),
        m0: Arc::new(|_, _| 0.0),
        sigma0: Arc::new(|_, _| [0.0, 0.0]),
        clamp_negative_v0: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn default_coefficients() {
        let p = default_params(0.0);
        assert_eq!((p.d_u, p.d_m, p.alpha, p.rho_m, p.mu_m, p.mu_u), (0.001, 0.001, 10.0, 0.0, 0.1, 0.0));
        assert_eq!(default_params(2.0).mu_u, 2.0);
        assert_eq!(p.chi(0.3), 0.005);
        assert_eq!(p.sensitivity.antiderivative(1.0), 0.005);
        p.validate().unwrap();
    }

    #[test]
    fn test1_center_and_corner() {
        let s = test1_setup(0.0);
        assert_eq!((s.u0)(0.5, 0.5), 1.0);
        assert_eq!((s.v0)(0.5, 0.5), 0.0);
        assert_eq!((s.m0)(0.5, 0.5), 0.5);
        assert_eq!((s.sigma0)(0.5, 0.5), [0.0, 0.0]);
        assert!(((s.u0)(0.0, 0.0) - (-200.0f64).exp()).abs() < 1e-300);
        assert!(((s.v0)(0.0, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn test2_bumps() {
        let b: Vec<f64> = MATRIX_BUMPS.iter().map(|t| t.0).collect();
        let c: Vec<f64> = MATRIX_BUMPS.iter().map(|t| t.1).collect();
        assert_eq!(b, [800.0, 800.0, 600.0, 600.0, 600.0, 400.0, 100.0]);
        assert_eq!(c, [100.0, 100.0, 200.0, 200.0, 200.0, 300.0, 50.0]);
        let s = test2_setup(2.0);
        assert!(s.clamp_negative_v0);
        assert!((s.v0)(0.2, 0.2) <= 0.0);
        assert!(((s.v0)(0.05, 0.95) - 1.0).abs() < 1e-3);
        assert_eq!((s.u0)(0.5, 0.5), 1.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let eps = 1e-6;
        for setup in [test1_setup(0.0), test2_setup(0.0)] {
            for _ in 0..100 {
                let (x, y) = (rng.gen::<f64>(), rng.gen::<f64>());
                let g = (setup.sigma0)(x, y);
                let fx = ((setup.v0)(x + eps, y) - (setup.v0)(x - eps, y)) / (2.0 * eps);
                let fy = ((setup.v0)(x, y + eps) - (setup.v0)(x, y - eps)) / (2.0 * eps);
                assert!((g[0] - fx).abs() < 1e-6 && (g[1] - fy).abs() < 1e-6, "{} at ({x}, {y})", setup.name);
            }
        }
    }

    #[test]
    fn names_parse() {
        for k in [ProblemKind::Test1, ProblemKind::Test2, ProblemKind::Zero] {
            assert_eq!(k.to_string().parse::<ProblemKind>().unwrap(), k);
        }
        assert!("test3".parse::<ProblemKind>().is_err());
    }

    proptest! {
        #[test]
        fn test1_data_ranges(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
            let s = test1_setup(0.0);
            let (u, v, m) = ((s.u0)(x, y), (s.v0)(x, y), (s.m0)(x, y));
            prop_assert!(u >= 0.0 && m >= 0.0);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(m, 0.5 * u);
        }
    }
}
