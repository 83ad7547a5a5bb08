//! Bundled nonsmooth convex terms and their proximal maps.

use super::NonsmoothObjective;
use crate::error::{Error, Result};

/// Componentwise soft threshold at level `γλ`.
pub fn prox_l1(gamma: f64, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma.is_finite()) || !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "prox_l1 needs γ > 0 and λ ≥ 0, got γ={gamma}, λ={lambda}"
        )));
    }
    Ok(soft_threshold(gamma * lambda, x))
}

fn soft_threshold(level: f64, x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| v.signum() * (v.abs() - level).max(0.0))
        .collect()
}

/// `λ‖x‖₁`.
#[derive(Clone, Debug)]
pub struct L1Norm {
    weight: f64,
}

impl L1Norm {
    pub fn new(weight: f64) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "l1 weight must be finite and ≥ 0, got {weight}"
            )));
        }
        Ok(Self { weight })
    }
}

impl NonsmoothObjective for L1Norm {
    fn value(&self, x: &[f64]) -> f64 {
        self.weight * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, gamma: f64, x: &[f64]) -> Vec<f64> {
        soft_threshold(gamma * self.weight, x)
    }
}

/// Indicator of the box `Π [lo_i, hi_i]`; bounds may be infinite.
#[derive(Clone, Debug)]
pub struct BoxIndicator {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxIndicator {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidParameter(
                "box needs equal-length bounds with lower ≤ upper".into(),
            ));
        }
        Ok(Self { lower, upper })
    }
}

impl NonsmoothObjective for BoxIndicator {
    fn value(&self, x: &[f64]) -> f64 {
        let inside = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *l <= *v && *v <= *u);
        if inside {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, _gamma: f64, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| v.max(*l).min(*u))
            .collect()
    }
}
