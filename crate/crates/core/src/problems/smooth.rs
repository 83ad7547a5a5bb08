//! Bundled smooth convex objectives.

use super::{Region, SmoothObjective};
use crate::error::{Error, Result};

/// Separable weighted quadratic `½ Σ w_i (x_i − c_i)²`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    weights: Vec<f64>,
    center: Vec<f64>,
}

impl Quadratic {
    pub fn new(weights: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != center.len() {
            return Err(Error::InvalidParameter(
                "quadratic needs equal-length nonempty weights and center".into(),
            ));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "quadratic weights must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { weights, center })
    }

    /// `½‖x‖²` in dimension `n`.
    pub fn isotropic(n: usize) -> Self {
        Self {
            weights: vec![1.0; n],
            center: vec![0.0; n],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
}

impl SmoothObjective for Quadratic {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&self.center)
            .zip(x)
            .map(|((w, c), xi)| 0.5 * w * (xi - c) * (xi - c))
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.center)
            .zip(x)
            .map(|((w, c), xi)| w * (xi - c))
            .collect()
    }

    fn lipschitz(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }
}

/// `Σ x_i⁴ / 4`; its gradient is Lipschitz only on bounded sets, so a ball is declared.
#[derive(Clone, Debug)]
pub struct Quartic {
    dim: usize,
    radius: f64,
}

impl Quartic {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 || !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(
                "quartic needs dim > 0 and a finite radius > 0".into(),
            ));
        }
        Ok(Self { dim, radius })
    }
}

impl SmoothObjective for Quartic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| 0.25 * v.powi(4)).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v.powi(3)).collect()
    }

    /// Largest Hessian entry `3x²` over the declared ball.
    fn lipschitz(&self) -> f64 {
        3.0 * self.radius * self.radius
    }

    fn region(&self) -> Region {
        Region::Ball {
            center: vec![0.0; self.dim],
            radius: self.radius,
        }
    }
}

/// One-dimensional `½ dist(x, [a, b])²`.
#[derive(Clone, Debug)]
pub struct FlatBottom {
    a: f64,
    b: f64,
}

impl FlatBottom {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidParameter(format!(
                "flat bottom needs finite a < b, got [{a}, {b}]"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn excess(&self, x: f64) -> f64 {
        if x > self.b {
            x - self.b
        } else if x < self.a {
            x - self.a
        } else {
            0.0
        }
    }
}

impl SmoothObjective for FlatBottom {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        let e = self.excess(x[0]);
        0.5 * e * e
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![self.excess(x[0])]
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }

    fn kinks(&self) -> Vec<(usize, f64)> {
        vec![(0, self.a), (0, self.b)]
    }
}
