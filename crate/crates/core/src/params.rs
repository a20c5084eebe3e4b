use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Haptotactic sensitivity χ(v) together with an antiderivative X, X(0) = 0.
#[derive(Clone)]
pub enum Sensitivity {
    Constant(f64),
    Custom { chi: ScalarFn, antiderivative: ScalarFn },
}

impl Sensitivity {
    pub fn custom(
        chi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        antiderivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Sensitivity::Custom { chi: Arc::new(chi), antiderivative: Arc::new(antiderivative) }
    }

    #[inline]
    pub fn chi(&self, v: f64) -> f64 {
        match self {
            Sensitivity::Constant(c) => *c,
            Sensitivity::Custom { chi, .. } => chi(v),
        }
    }

    #[inline]
    pub fn antiderivative(&self, v: f64) -> f64 {
        match self {
            Sensitivity::Constant(c) => c * v,
            Sensitivity::Custom { antiderivative, .. } => antiderivative(v),
        }
    }
}

impl fmt::Debug for Sensitivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sensitivity::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Sensitivity::Custom { .. } => f.write_str("Custom"),
        }
    }
}

/// Coefficients of the cell / matrix / enzyme system.
#[derive(Debug, Clone)]
pub struct ModelParams {
    /// cell diffusion
    pub d_u: f64,
    /// enzyme diffusion
    pub d_m: f64,
    /// matrix degradation rate
    pub alpha: f64,
    /// enzyme decay
    pub rho_m: f64,
    /// enzyme production
    pub mu_m: f64,
    /// cell proliferation
    pub mu_u: f64,
    pub sensitivity: Sensitivity,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("d_u", self.d_u), ("d_m", self.d_m)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        let nonneg = [("alpha", self.alpha), ("rho_m", self.rho_m), ("mu_m", self.mu_m), ("mu_u", self.mu_u)];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if let Sensitivity::Constant(c) = self.sensitivity {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidArgument(format!("sensitivity must be positive, got {c}")));
            }
        }
        let x0 = self.sensitivity.antiderivative(0.0);
        if x0 != 0.0 {
            return Err(Error::InvalidArgument(format!("sensitivity antiderivative must vanish at 0, got {x0}")));
        }
        Ok(())
    }

    #[inline]
    pub fn chi(&self, v: f64) -> f64 {
        self.sensitivity.chi(v)
    }

    /// φ(v) = exp(X(v)/D_u); overflow is an error naming `v`.
    pub fn phi(&self, v: f64) -> Result<f64> {
        let p = self.phi_unchecked(v);
        if p.is_finite() {
            Ok(p)
        } else {
            Err(Error::NonFinite(format!("phi overflows at v = {v}")))
        }
    }

    #[inline]
    pub fn phi_unchecked(&self, v: f64) -> f64 {
        (self.sensitivity.antiderivative(v) / self.d_u).exp()
    }
}

/// Uniform time grid t_k = k·Δt, k = 0..=steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl TimeConfig {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::InvalidArgument(format!("final time must be nonnegative, got {t_end}")));
        }
        let steps = (t_end / dt).round();
        if (steps * dt - t_end).abs() > 1e-12 * t_end.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "final time {t_end} is not an integer multiple of dt = {dt}"
            )));
        }
        Ok(Self { dt, t_end, steps: steps as usize })
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    /// Grid index nearest to `t`.
    pub fn nearest_step(&self, t: f64) -> usize {
        (t / self.dt).round().max(0.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams {
            d_u: 0.001,
            d_m: 0.001,
            alpha: 10.0,
            rho_m: 0.0,
            mu_m: 0.1,
            mu_u: 0.0,
            sensitivity: Sensitivity::Constant(0.005),
        }
    }

    #[test]
    fn phi_values() {
        let p = params();
        assert_eq!(p.phi(0.0).unwrap(), 1.0);
        assert!((p.phi(1.0).unwrap() - 148.413_159_102_576_6).abs() < 1e-10);
        assert!((p.phi(0.2).unwrap() - std::f64::consts::E).abs() < 1e-13);
        assert!(p.phi(1e6).is_err());
    }

    #[test]
    fn phi_monotone_and_at_least_one() {
        let p = params();
        let mut last = 1.0;
        for k in 0..=100 {
            let v = k as f64 / 50.0;
            let f = p.phi(v).unwrap();
            assert!(f >= 1.0);
            if k > 0 {
                assert!(f > last);
            }
            last = f;
        }
    }

    #[test]
    fn custom_sensitivity() {
        let mut p = params();
        p.sensitivity = Sensitivity::custom(|v| 0.002 * (1.0 + v), |v| 0.002 * (v + 0.5 * v * v));
        p.validate().unwrap();
        assert!((p.phi(1.0).unwrap() - 3.0f64.exp()).abs() < 1e-12);
        p.sensitivity = Sensitivity::custom(|_| 1.0, |v| v + 1.0);
        assert!(p.validate().is_err());
    }

    #[test]
    fn validation() {
        assert!(params().validate().is_ok());
        let mut p = params();
        p.d_u = 0.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.mu_u = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn time_grid() {
        let t = TimeConfig::new(0.01, 15.0).unwrap();
        assert_eq!(t.steps, 1500);
        assert_eq!(t.nearest_step(5.0), 500);
        assert!(TimeConfig::new(0.0, 1.0).is_err());
        assert!(TimeConfig::new(0.3, 1.0).is_err());
        assert_eq!(TimeConfig::new(0.04, 1.0).unwrap().steps, 25);
    }
}
