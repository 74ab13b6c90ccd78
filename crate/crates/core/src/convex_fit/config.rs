use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Penalty parameter of the augmented Lagrangian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rho {
    /// `√d λ² / n`, the choice behind the `O(n√d / T)` rate.
    Auto,
    Fixed(f64),
}

impl Rho {
    pub fn resolve(self, n: usize, d: usize, lambda: f64) -> Result<f64> {
        let rho = match self {
            Self::Auto => (d as f64).sqrt() * lambda * lambda / n as f64,
            Self::Fixed(r) => r,
        };
        if rho > 0.0 && rho.is_finite() {
            Ok(rho)
        } else {
            Err(Error::InvalidConfig(format!("rho must be positive and finite, got {rho}")))
        }
    }
}

/// Restricts every fitted slope coordinate to one sign.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotone {
    #[default]
    Off,
    Increasing,
    Decreasing,
}

/// Stop when the monitored error improves by less than `min_improvement`
/// over a window of `window` iterations (`None` means `n`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub window: Option<usize>,
    pub min_improvement: f64,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self {
            window: None,
            min_improvement: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub lambda: f64,
    pub rho: Rho,
    pub max_iters: usize,
    pub early_stop: Option<EarlyStop>,
    /// Return the mean of all iterates instead of the last one.
    pub averaged_output: bool,
    pub monotone: Monotone,
}

impl FitConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            rho: Rho::Auto,
            max_iters: 1000,
            early_stop: None,
            averaged_output: false,
            monotone: Monotone::Off,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if let Rho::Fixed(r) = self.rho {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidConfig(format!("rho must be positive and finite, got {r}")));
            }
        }
        if let Some(es) = self.early_stop {
            if es.window == Some(0) || !(es.min_improvement >= 0.0) {
                return Err(Error::InvalidConfig(
                    "early stopping needs a positive window and a non-negative threshold".into(),
                ));
            }
        }
        Ok(())
    }
}
