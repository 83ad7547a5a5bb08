//! Convex objectives, proximal maps, known solution sets and analytic oracles.

pub mod bessel;
pub mod catalog;
pub mod nonsmooth;
pub mod smooth;

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::linalg;

pub use bessel::{bessel_j, bessel_profile, bessel_solution, bessel_state};
pub use nonsmooth::{prox_l1, BoxIndicator, L1Norm};
pub use smooth::{FlatBottom, Quadratic, Quartic};

/// Set on which a declared gradient Lipschitz constant is valid.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Global,
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Global => true,
            Region::Ball { center, radius } => linalg::dist(x, center) <= *radius,
        }
    }
}

/// Convex differentiable `Φ` with a gradient Lipschitz constant valid on `region()`.
pub trait SmoothObjective: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn lipschitz(&self) -> f64;
    fn region(&self) -> Region {
        Region::Global
    }
    /// Hyperplanes `x[axis] = value` across which the gradient is not differentiable.
    fn kinks(&self) -> Vec<(usize, f64)> {
        Vec::new()
    }
}

/// Proper lower semicontinuous convex `Ψ` with an explicit proximal map.
pub trait NonsmoothObjective: Send + Sync + fmt::Debug {
    /// May return `+∞`.
    fn value(&self, x: &[f64]) -> f64;
    /// `argmin_ξ Ψ(ξ) + ‖ξ − x‖² / (2γ)`.
    fn prox(&self, gamma: f64, x: &[f64]) -> Vec<f64>;
}

/// Known set of minimizers.
#[derive(Clone, Debug, PartialEq)]
pub enum ArgminSet {
    Point(Vec<f64>),
    /// One-dimensional interval `[a, b]`.
    Interval {
        a: f64,
        b: f64,
    },
    /// `base + span(directions)`; directions must be orthonormal.
    Affine {
        base: Vec<f64>,
        directions: Vec<Vec<f64>>,
    },
}

impl ArgminSet {
    pub fn dim(&self) -> usize {
        match self {
            ArgminSet::Point(p) => p.len(),
            ArgminSet::Interval { .. } => 1,
            ArgminSet::Affine { base, .. } => base.len(),
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ArgminSet::Point(p) => p.clone(),
            ArgminSet::Interval { a, b } => vec![x[0].clamp(*a, *b)],
            ArgminSet::Affine { base, directions } => {
                let offset = linalg::sub(x, base);
                let mut out = base.clone();
                for d in directions {
                    let c = linalg::dot(&offset, d);
                    for (o, di) in out.iter_mut().zip(d) {
                        *o += c * di;
                    }
                }
                out
            }
        }
    }

    pub fn dist(&self, x: &[f64]) -> f64 {
        linalg::dist(x, &self.project(x))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.dist(x) <= tol
    }

    /// A canonical member, used when a caller needs some minimizer.
    pub fn representative(&self) -> Vec<f64> {
        match self {
            ArgminSet::Point(p) => p.clone(),
            ArgminSet::Interval { a, .. } => vec![*a],
            ArgminSet::Affine { base, .. } => base.clone(),
        }
    }
}

/// Composite objective `Θ = Φ + Ψ` with optional ground truth.
#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    smooth: Arc<dyn SmoothObjective>,
    nonsmooth: Option<Arc<dyn NonsmoothObjective>>,
    min_value: Option<f64>,
    argmin: Option<ArgminSet>,
    strong_min_modulus: Option<f64>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("smooth", &self.smooth)
            .field("nonsmooth", &self.nonsmooth)
            .field("min_value", &self.min_value)
            .field("argmin", &self.argmin)
            .field("strong_min_modulus", &self.strong_min_modulus)
            .finish()
    }
}

/// Tolerance used when validating that a point lies in the declared argmin set.
pub const ARGMIN_TOL: f64 = 1e-9;

impl ProblemSpec {
    pub fn new(name: impl Into<String>, smooth: impl SmoothObjective + 'static) -> Self {
        Self {
            name: name.into(),
            smooth: Arc::new(smooth),
            nonsmooth: None,
            min_value: None,
            argmin: None,
            strong_min_modulus: None,
        }
    }

    pub fn with_nonsmooth(mut self, psi: impl NonsmoothObjective + 'static) -> Self {
        self.nonsmooth = Some(Arc::new(psi));
        self
    }

    pub fn with_min_value(mut self, v: f64) -> Self {
        self.min_value = Some(v);
        self
    }

    pub fn with_argmin(mut self, set: ArgminSet) -> Result<Self> {
        check_dim(self.dim(), set.dim())?;
        self.argmin = Some(set);
        Ok(self)
    }

    pub fn with_strong_min(mut self, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "strong minimum modulus must be > 0, got {mu}"
            )));
        }
        self.strong_min_modulus = Some(mu);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn kinks(&self) -> Vec<(usize, f64)> {
        self.smooth.kinks()
    }

    pub fn smooth(&self) -> &dyn SmoothObjective {
        self.smooth.as_ref()
    }

    pub fn nonsmooth(&self) -> Option<&dyn NonsmoothObjective> {
        self.nonsmooth.as_deref()
    }

    pub fn has_nonsmooth(&self) -> bool {
        self.nonsmooth.is_some()
    }

    pub fn lipschitz(&self) -> f64 {
        self.smooth.lipschitz()
    }

    pub fn region(&self) -> Region {
        self.smooth.region()
    }

    pub fn min_value(&self) -> Option<f64> {
        self.min_value
    }

    pub fn argmin(&self) -> Option<&ArgminSet> {
        self.argmin.as_ref()
    }

    pub fn strong_min_modulus(&self) -> Option<f64> {
        self.strong_min_modulus
    }

    pub fn require_min_value(&self) -> Result<f64> {
        self.min_value
            .ok_or(Error::MissingGroundTruth("minimum value"))
    }

    pub fn require_argmin(&self) -> Result<&ArgminSet> {
        self.argmin
            .as_ref()
            .ok_or(Error::MissingGroundTruth("argmin set"))
    }

    pub fn require_strong_min(&self) -> Result<f64> {
        self.strong_min_modulus
            .ok_or(Error::MissingGroundTruth("strong minimum modulus"))
    }

    /// Rejects `z` unless it lies in the declared argmin set.
    pub fn validate_minimizer(&self, z: &[f64]) -> Result<()> {
        check_dim(self.dim(), z.len())?;
        let d = self.require_argmin()?.dist(z);
        if d <= ARGMIN_TOL {
            Ok(())
        } else {
            Err(Error::NotInArgmin(d))
        }
    }

    pub fn smooth_value(&self, x: &[f64]) -> f64 {
        self.smooth.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.smooth.gradient(x)
    }

    /// `Ψ(x)`, zero when no nonsmooth part is present.
    pub fn nonsmooth_value(&self, x: &[f64]) -> f64 {
        self.nonsmooth.as_ref().map_or(0.0, |p| p.value(x))
    }

    /// `prox_{γΨ}(x)`, the identity when no nonsmooth part is present.
    pub fn prox(&self, gamma: f64, x: &[f64]) -> Vec<f64> {
        match &self.nonsmooth {
            Some(p) => p.prox(gamma, x),
            None => x.to_vec(),
        }
    }

    /// `Θ(x) = Φ(x) + Ψ(x)` without dimension validation.
    pub(crate) fn theta(&self, x: &[f64]) -> f64 {
        self.smooth.value(x) + self.nonsmooth_value(x)
    }
}

/// `Φ(x) + Ψ(x)`; may be `+∞`.
pub fn composite_value(spec: &ProblemSpec, x: &[f64]) -> Result<f64> {
    check_dim(spec.dim(), x.len())?;
    Ok(spec.theta(x))
}

/// Worst componentwise error of the gradient against central differences,
/// relative to `max(1, |∂_i Φ(x)|)`.
pub fn check_gradient(spec: &ProblemSpec, x: &[f64], h: f64) -> Result<f64> {
    check_dim(spec.dim(), x.len())?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step must be > 0, got {h}"
        )));
    }
    let g = spec.gradient(x);
    if !linalg::all_finite(&g) {
        return Err(Error::NonFinite(format!("gradient at {x:?}")));
    }
    let mut worst: f64 = 0.0;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = spec.smooth_value(&probe);
        probe[i] = x[i] - h;
        let fm = spec.smooth_value(&probe);
        probe[i] = x[i];
        let fd = (fp - fm) / (2.0 * h);
        if !fd.is_finite() {
            return Err(Error::NonFinite(format!(
                "finite difference in component {i} at {x:?}"
            )));
        }
        worst = worst.max((g[i] - fd).abs() / g[i].abs().max(1.0));
    }
    Ok(worst)
}

/// One-dimensional `½ dist(x, [a, b])²` with its ground truth.
pub fn make_flat_bottom(a: f64, b: f64) -> Result<ProblemSpec> {
    let phi = FlatBottom::new(a, b)?;
    ProblemSpec::new("flat-bottom", phi)
        .with_min_value(0.0)
        .with_argmin(ArgminSet::Interval { a, b })
}

/// One-dimensional LASSO `½(x − c)² + λ|x|` with its closed-form minimizer.
pub fn make_lasso_1d(c: f64, lambda: f64) -> Result<ProblemSpec> {
    let phi = Quadratic::new(vec![1.0], vec![c])?;
    let psi = L1Norm::new(lambda)?;
    let xstar = c.signum() * (c.abs() - lambda).max(0.0);
    let min = 0.5 * (xstar - c) * (xstar - c) + lambda * xstar.abs();
    ProblemSpec::new("lasso-small", phi)
        .with_nonsmooth(psi)
        .with_min_value(min)
        .with_argmin(ArgminSet::Point(vec![xstar]))?
        .with_strong_min(1.0)
}
