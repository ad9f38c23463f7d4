use serde::{Deserialize, Serialize};

use crate::error::{FhnError, Result};

/// Constants of the operator `u_t - eps u_xx + a u + b int_0^t e^{-beta (t-s)} u ds`
/// on the strip `[0, length] x (0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FhnParams {
    pub eps: f64,
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    #[serde(alias = "L")]
    pub length: f64,
    #[serde(alias = "T")]
    pub horizon: f64,
}

impl FhnParams {
    pub fn new(eps: f64, a: f64, b: f64, beta: f64, length: f64, horizon: f64) -> Result<Self> {
        let p = FhnParams {
            eps,
            a,
            b,
            beta,
            length,
            horizon,
        };
        p.validate()?;
        Ok(p)
    }

    /// `eps = a = b = beta = 1` on the unit strip with horizon 1.
    pub fn unit() -> Self {
        FhnParams {
            eps: 1.0,
            a: 1.0,
            b: 1.0,
            beta: 1.0,
            length: 1.0,
            horizon: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("eps", self.eps, self.eps > 0.0),
            ("length", self.length, self.length > 0.0),
            ("horizon", self.horizon, self.horizon > 0.0),
            ("a", self.a, true),
            ("b", self.b, true),
            ("beta", self.beta, true),
        ];
        for (name, value, ok) in checks {
            if !value.is_finite() {
                return Err(FhnError::Config(format!("{name} must be finite, got {value}")));
            }
            if !ok {
                return Err(FhnError::Config(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }

    /// True in the regime `a > 0, b >= 0, beta > 0` where the kernel and solution bounds hold.
    pub fn estimates_valid(&self) -> bool {
        self.a > 0.0 && self.b >= 0.0 && self.beta > 0.0
    }

    pub(crate) fn require_estimates(&self, op: &str) -> Result<()> {
        if self.estimates_valid() {
            Ok(())
        } else {
            Err(FhnError::Regime(format!(
                "{op} needs a > 0, b >= 0, beta > 0 (got a={}, b={}, beta={})",
                self.a, self.b, self.beta
            )))
        }
    }

    pub(crate) fn require_kernel_regime(&self, op: &'static str) -> Result<()> {
        if self.b < 0.0 {
            return Err(FhnError::domain(
                op,
                format!("kernels are not evaluated for b < 0 (b = {})", self.b),
            ));
        }
        Ok(())
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = b;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }
}
