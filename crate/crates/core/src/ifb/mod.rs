//! Inertial forward-backward iterations
//! `y_k = x_k + (1 − α/k)(x_k − x_{k−1})`, `x_{k+1} = prox_{sΨ}(y_k − s∇Φ(y_k) − s g_k)`,
//! with per-step inequality checks and discrete energies.

mod energies;

pub use energies::{
    critical_energy, discrete_lyapunov, discrete_passes, iterate_boundedness_check,
    DiscreteEnergies, DiscretePass, RateCertificate,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::problems::ProblemSpec;

/// Relative slack for discrete inequality checks.
pub const DISCRETE_SLACK: f64 = 1e-12;

pub(crate) fn discrete_slack(lhs: f64) -> f64 {
    DISCRETE_SLACK * (1.0 + lhs.abs())
}

/// Additive errors `g_k` in the forward step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// `g_k = c · k^{−q} · direction` with a unit `direction`.
    PowerDecay { c: f64, q: f64, direction: Vec<f64> },
    /// `g_k` for `k = 1, 2, …`; zero past the end.
    Explicit { values: Vec<Vec<f64>> },
}

impl Perturbation {
    /// `c · k^{−q}` along the first coordinate axis.
    pub fn power_decay(c: f64, q: f64, dim: usize) -> Self {
        let mut direction = vec![0.0; dim.max(1)];
        direction[0] = 1.0;
        Perturbation::PowerDecay { c, q, direction }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Perturbation::PowerDecay { c, q, direction } => {
                check_dim(dim, direction.len())?;
                if !(c.is_finite() && q.is_finite())
                    || (linalg::norm(direction) - 1.0).abs() > 1e-12
                {
                    return Err(Error::InvalidParameter(
                        "perturbation needs finite c, q and a unit direction".into(),
                    ));
                }
                Ok(())
            }
            Perturbation::Explicit { values } => {
                values.iter().try_for_each(|v| check_dim(dim, v.len()))
            }
        }
    }

    pub fn at(&self, k: usize, dim: usize) -> Vec<f64> {
        match self {
            Perturbation::PowerDecay { c, q, direction } => {
                linalg::scale(c * (k as f64).powf(-q), direction)
            }
            Perturbation::Explicit { values } => {
                values.get(k - 1).cloned().unwrap_or_else(|| vec![0.0; dim])
            }
        }
    }

    /// Whether `Σ_k k^p ‖g_k‖ < ∞`, decided from the kind alone.
    pub fn is_summable_against(&self, p: f64) -> bool {
        match self {
            Perturbation::PowerDecay { c, q, .. } => *c == 0.0 || *q - p > 1.0,
            Perturbation::Explicit { .. } => true,
        }
    }
}

/// Complete record of one run, `x_0 … x_K` with `x_1 = x_0`.
#[derive(Clone, Debug)]
pub struct IterateLog {
    problem: ProblemSpec,
    alpha: f64,
    s: f64,
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<f64>,
    perturbations: Option<Vec<f64>>,
}

impl IterateLog {
    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn step(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Final index `K`.
    pub fn iterations(&self) -> usize {
        self.values.len() - 1
    }

    pub fn x(&self, k: usize) -> &[f64] {
        &self.xs[k * self.dim..(k + 1) * self.dim]
    }

    /// Extrapolated point `y_k`, `1 ≤ k < K`.
    pub fn y(&self, k: usize) -> &[f64] {
        &self.ys[(k - 1) * self.dim..k * self.dim]
    }

    /// `g_k`, `1 ≤ k < K`, when the run was perturbed.
    pub fn perturbation(&self, k: usize) -> Option<&[f64]> {
        self.perturbations
            .as_ref()
            .map(|g| &g[(k - 1) * self.dim..k * self.dim])
    }

    pub fn is_perturbed(&self) -> bool {
        self.perturbations.is_some()
    }

    /// `Θ(x_k)`.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `x_k − x_{k−1}`, `k ≥ 1`.
    pub fn dx(&self, k: usize) -> Vec<f64> {
        linalg::sub(self.x(k), self.x(k - 1))
    }

    /// `‖x_k − x_{k−1}‖` for `k ≥ 1`, and 0 at `k = 0`.
    pub fn dx_norm(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            linalg::dist(self.x(k), self.x(k - 1))
        }
    }

    /// `α_k = 1 − α/k`.
    pub fn momentum(&self, k: usize) -> f64 {
        1.0 - self.alpha / k as f64
    }

    /// `Θ(x_k) − min Θ` for every `k`.
    pub fn gaps(&self) -> Result<Vec<f64>> {
        let min = self.problem.require_min_value()?;
        Ok(self.values.iter().map(|v| v - min).collect())
    }
}

fn check_step(spec: &ProblemSpec, s: f64) -> Result<()> {
    let l = spec.lipschitz();
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step size must be > 0, got {s}"
        )));
    }
    if l > 0.0 && s > (1.0 + 1e-12) / l {
        return Err(Error::Precondition(format!(
            "step size s = {s} exceeds 1/L = {}",
            1.0 / l
        )));
    }
    Ok(())
}

fn check_region(spec: &ProblemSpec, x: &[f64], what: &str, k: usize) -> Result<()> {
    if spec.region().contains(x) {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "{what} at k = {k} left the region where the Lipschitz constant is declared"
        )))
    }
}

/// Runs `K` iterations from `x_1 = x_0`.
pub fn run_ifb(
    spec: &ProblemSpec,
    alpha: f64,
    s: f64,
    x0: &[f64],
    iterations: usize,
    perturbation: Option<&Perturbation>,
) -> Result<IterateLog> {
    let n = spec.dim();
    check_dim(n, x0.len())?;
    check_step(spec, s)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "damping exponent must be > 0, got {alpha}"
        )));
    }
    if iterations < 2 {
        return Err(Error::InvalidParameter(format!(
            "need K ≥ 2 iterations, got {iterations}"
        )));
    }
    if !linalg::all_finite(x0) {
        return Err(Error::NonFinite("initial point".into()));
    }
    check_region(spec, x0, "x_0", 0)?;
    if let Some(g) = perturbation {
        g.validate(n)?;
    }
    let k_max = iterations;
    let mut xs = Vec::with_capacity((k_max + 1) * n);
    let mut ys = Vec::with_capacity((k_max - 1) * n);
    let mut gs = perturbation.map(|_| Vec::with_capacity((k_max - 1) * n));
    xs.extend_from_slice(x0);
    xs.extend_from_slice(x0);
    for k in 1..k_max {
        let (prev, cur) = (&xs[(k - 1) * n..k * n], &xs[k * n..(k + 1) * n]);
        let beta = 1.0 - alpha / k as f64;
        let y: Vec<f64> = cur
            .iter()
            .zip(prev)
            .map(|(c, p)| c + beta * (c - p))
            .collect();
        check_region(spec, &y, "y_k", k)?;
        let grad = spec.gradient(&y);
        let mut arg = linalg::axpy(&y, -s, &grad);
        if let (Some(g), Some(store)) = (perturbation, gs.as_mut()) {
            let gk = g.at(k, n);
            for (a, gi) in arg.iter_mut().zip(&gk) {
                *a -= s * gi;
            }
            store.extend_from_slice(&gk);
        }
        let next = spec.prox(s, &arg);
        if !linalg::all_finite(&next) {
            return Err(Error::NonFinite(format!("iterate x_{}", k + 1)));
        }
        check_region(spec, &next, "x_{k+1}", k)?;
        ys.extend_from_slice(&y);
        xs.extend_from_slice(&next);
    }
    let values = (0..=k_max)
        .map(|k| spec.theta(&xs[k * n..(k + 1) * n]))
        .collect();
    Ok(IterateLog {
        problem: spec.clone(),
        alpha,
        s,
        dim: n,
        xs,
        ys,
        values,
        perturbations: gs,
    })
}

/// Rebuilds a log from stored iterates `x_0 … x_K`, recomputing `y_k`, `g_k` and `Θ(x_k)`.
pub fn log_from_iterates(
    spec: &ProblemSpec,
    alpha: f64,
    s: f64,
    iterates: &[Vec<f64>],
    perturbation: Option<&Perturbation>,
) -> Result<IterateLog> {
    let n = spec.dim();
    check_step(spec, s)?;
    if iterates.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 stored iterates, got {}",
            iterates.len()
        )));
    }
    if let Some(x) = iterates.iter().find(|x| x.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if let Some(g) = perturbation {
        g.validate(n)?;
    }
    let k_max = iterates.len() - 1;
    let xs = iterates.concat();
    let mut ys = Vec::with_capacity((k_max - 1) * n);
    let mut gs = perturbation.map(|_| Vec::with_capacity((k_max - 1) * n));
    for k in 1..k_max {
        let beta = 1.0 - alpha / k as f64;
        ys.extend(
            iterates[k]
                .iter()
                .zip(&iterates[k - 1])
                .map(|(c, p)| c + beta * (c - p)),
        );
        if let (Some(g), Some(store)) = (perturbation, gs.as_mut()) {
            store.extend(g.at(k, n));
        }
    }
    let values = iterates.iter().map(|x| spec.theta(x)).collect();
    Ok(IterateLog {
        problem: spec.clone(),
        alpha,
        s,
        dim: n,
        xs,
        ys,
        values,
        perturbations: gs,
    })
}

/// Composite gradient mapping `G_s(y) = (y − prox_{sΨ}(y − s∇Φ(y)))/s`.
pub fn gs_operator(spec: &ProblemSpec, s: f64, y: &[f64]) -> Result<Vec<f64>> {
    check_dim(spec.dim(), y.len())?;
    check_step(spec, s)?;
    Ok(gs_unchecked(spec, s, y))
}

fn gs_unchecked(spec: &ProblemSpec, s: f64, y: &[f64]) -> Vec<f64> {
    let forward = linalg::axpy(y, -s, &spec.gradient(y));
    let p = spec.prox(s, &forward);
    y.iter().zip(&p).map(|(a, b)| (a - b) / s).collect()
}

/// `Θ(y − sG) − [Θ(x) + ⟨G, y − x⟩ − (s/2)‖G‖²]` with `G = G_s(y)`; nonpositive when the rule holds.
pub fn verify_descent_rule(spec: &ProblemSpec, s: f64, y: &[f64], x: &[f64]) -> Result<f64> {
    check_dim(spec.dim(), x.len())?;
    let g = gs_operator(spec, s, y)?;
    let theta_x = spec.theta(x);
    if !theta_x.is_finite() {
        return Err(Error::InvalidParameter(
            "descent rule needs Θ(x) finite".into(),
        ));
    }
    let lhs = spec.theta(&linalg::axpy(y, -s, &g));
    let rhs = theta_x + linalg::dot(&g, &linalg::sub(y, x)) - 0.5 * s * linalg::norm_sq(&g);
    Ok(lhs - rhs)
}

/// Per-index failure of a discrete inequality `lhs ≤ rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityViolation {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs − slack`.
    pub excess: f64,
}

fn collect_violations(
    range: std::ops::Range<usize>,
    f: impl Fn(usize) -> (f64, f64),
) -> Vec<InequalityViolation> {
    range
        .filter_map(|k| {
            let (lhs, rhs) = f(k);
            let excess = lhs - rhs - discrete_slack(lhs);
            (excess > 0.0 || !lhs.is_finite()).then_some(InequalityViolation {
                k,
                lhs,
                rhs,
                excess,
            })
        })
        .collect()
}

/// `W_k = Θ(x_k) − min Θ + ‖x_k − x_{k−1}‖²/(2s)` for `k ≥ 1` (index 0 repeats index 1).
pub fn energy_w(log: &IterateLog) -> Result<Vec<f64>> {
    let gaps = log.gaps()?;
    let s = log.step();
    Ok((0..gaps.len())
        .map(|k| gaps[k] + log.dx_norm(k).powi(2) / (2.0 * s))
        .collect())
}

/// Checks `W_{k+1} − W_k ≤ −(1 − α_k²)/(2s)‖x_k − x_{k−1}‖²` for `1 ≤ k < K`.
pub fn verify_energy_decay(log: &IterateLog) -> Result<Vec<InequalityViolation>> {
    let w = energy_w(log)?;
    let s = log.step();
    Ok(collect_violations(1..log.iterations(), |k| {
        let a = log.momentum(k);
        (
            w[k + 1] - w[k],
            -(1.0 - a * a) / (2.0 * s) * log.dx_norm(k).powi(2),
        )
    }))
}

/// `h_k = ½‖x_k − z‖²`.
pub fn anchor(log: &IterateLog, z: &[f64]) -> Result<Vec<f64>> {
    check_dim(log.dim(), z.len())?;
    Ok((0..=log.iterations())
        .map(|k| 0.5 * linalg::dist_sq(log.x(k), z))
        .collect())
}

/// Checks `h_{k+1} − h_k − α_k(h_k − h_{k−1}) ≤ ½(α_k² + α_k)‖x_k − x_{k−1}‖² − s(Θ(x_{k+1}) − min Θ)`.
pub fn verify_anchor_inequality(log: &IterateLog, z: &[f64]) -> Result<Vec<InequalityViolation>> {
    log.problem().validate_minimizer(z)?;
    let h = anchor(log, z)?;
    let gaps = log.gaps()?;
    let s = log.step();
    Ok(collect_violations(1..log.iterations(), |k| {
        let a = log.momentum(k);
        let lhs = h[k + 1] - h[k] - a * (h[k] - h[k - 1]);
        (
            lhs,
            0.5 * (a * a + a) * log.dx_norm(k).powi(2) - s * gaps[k + 1],
        )
    }))
}

/// Descent-rule residuals along the run, at `(y_k, x_k)` and `(y_k, z)`.
pub fn verify_descent_along(log: &IterateLog, z: &[f64]) -> Result<Vec<InequalityViolation>> {
    let spec = log.problem();
    let s = log.step();
    let mut out = Vec::new();
    for k in 1..log.iterations() {
        for x in [log.x(k), z] {
            let residual = verify_descent_rule(spec, s, log.y(k), x)?;
            let slack = DISCRETE_SLACK * (1.0 + spec.theta(x).abs());
            if residual > slack {
                out.push(InequalityViolation {
                    k,
                    lhs: residual,
                    rhs: 0.0,
                    excess: residual - slack,
                });
            }
        }
    }
    Ok(out)
}
