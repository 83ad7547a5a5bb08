//! Continuous-time energies, Lyapunov functions and integral estimates
//! evaluated along a [`Trajectory`].

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::problems::ProblemSpec;

/// Sample where a series meant to be nonincreasing grew by more than its slack.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Index of the later sample.
    pub index: usize,
    /// Increase beyond the slack.
    pub magnitude: f64,
}

/// A scalar quantity sampled in time (or iteration count).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSeries {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub monotone_violations: Vec<Violation>,
}

impl DiagnosticSeries {
    pub fn new(name: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            times,
            values,
            monotone_violations: Vec::new(),
        }
    }

    /// Records every step where `v[i+1] > v[i] + slack(v[i])`.
    pub fn with_monotone_check(mut self, slack: impl Fn(f64) -> f64) -> Self {
        self.monotone_violations = self
            .values
            .windows(2)
            .enumerate()
            .filter_map(|(i, w)| {
                let excess = w[1] - w[0] - slack(w[0]);
                (excess > 0.0 || !w[1].is_finite()).then_some(Violation {
                    index: i + 1,
                    magnitude: excess,
                })
            })
            .collect();
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone_violations.is_empty()
    }

    /// Largest single-step increase, `max(v[i+1] − v[i])`.
    pub fn max_increase(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Supremum over samples with time in `[lo, hi]`.
    pub fn sup_on(&self, lo: f64, hi: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise `t^q · value`.
    pub fn scaled(&self, q: f64, name: impl Into<String>) -> Self {
        let values = self
            .times
            .iter()
            .zip(&self.values)
            .map(|(t, v)| t.powf(q) * v)
            .collect();
        Self::new(name, self.times.clone(), values)
    }

    /// Centered differences in the interior, one-sided at the ends.
    pub fn derivative(&self) -> Vec<f64> {
        let (t, v) = (&self.times, &self.values);
        let n = t.len();
        if n < 2 {
            return vec![0.0; n];
        }
        (0..n)
            .map(|i| {
                let (a, b) = if i == 0 {
                    (0, 1)
                } else if i == n - 1 {
                    (n - 2, n - 1)
                } else {
                    (i - 1, i + 1)
                };
                (v[b] - v[a]) / (t[b] - t[a])
            })
            .collect()
    }
}

/// Which parameter family defines `λ(t)` and `ξ(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// `λ = 2p t^{p−1}`, `ξ = 2(α − 4p + 1) p t^{2(p−1)}`.
    A,
    /// `λ = (α − p) t^{p−1}`, `ξ = (1 − p)(α − p) t^{2(p−1)}`.
    B,
}

/// Parameters of the Lyapunov function
/// `E = t^{2p}(Φ − min) + ½‖λ(x − z) + t^p ẋ‖² + (ξ/2)‖x − z‖²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovParams {
    pub p: f64,
    pub family: Family,
    pub alpha: f64,
}

impl LyapunovParams {
    pub fn new(family: Family, alpha: f64, p: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need α > 0 and p > 0, got α={alpha}, p={p}"
            )));
        }
        match family {
            Family::A if alpha < 4.0 * p - 1.0 => Err(Error::InvalidParameter(format!(
                "family A needs α ≥ 4p − 1 (α={alpha}, p={p})"
            ))),
            Family::B if !(p <= 1.0 && 3.0 * p < alpha) => Err(Error::InvalidParameter(format!(
                "family B needs p ≤ 1 and p < α/3 (α={alpha}, p={p})"
            ))),
            _ => Ok(Self { p, family, alpha }),
        }
    }

    /// Family A with `p = min(1, α/3)`.
    pub fn family_a(alpha: f64) -> Result<Self> {
        Self::new(Family::A, alpha, (alpha / 3.0).min(1.0))
    }

    pub fn lambda(&self, t: f64) -> f64 {
        let c = match self.family {
            Family::A => 2.0 * self.p,
            Family::B => self.alpha - self.p,
        };
        c * t.powf(self.p - 1.0)
    }

    fn xi_coefficient(&self) -> f64 {
        match self.family {
            Family::A => 2.0 * (self.alpha - 4.0 * self.p + 1.0) * self.p,
            Family::B => (1.0 - self.p) * (self.alpha - self.p),
        }
    }

    /// `ξ(t)`; exactly zero when the coefficient vanishes.
    pub fn xi(&self, t: f64) -> f64 {
        let c = self.xi_coefficient();
        if c == 0.0 {
            0.0
        } else {
            c * t.powf(2.0 * (self.p - 1.0))
        }
    }

    /// `E(t)` for one state.
    pub fn energy(&self, t: f64, gap: f64, x: &[f64], v: &[f64], z: &[f64]) -> f64 {
        let lam = self.lambda(t);
        let tp = t.powf(self.p);
        let mixed: f64 = x
            .iter()
            .zip(v)
            .zip(z)
            .map(|((xi, vi), zi)| (lam * (xi - zi) + tp * vi).powi(2))
            .sum();
        let mut e = t.powf(2.0 * self.p) * gap + 0.5 * mixed;
        let xi = self.xi(t);
        if xi != 0.0 {
            e += 0.5 * xi * linalg::dist_sq(x, z);
        }
        e
    }
}

/// Monotonicity slack for continuous energies.
pub fn continuous_slack(tol: f64, value: f64) -> f64 {
    100.0 * tol * (1.0 + value.abs())
}

fn gaps(traj: &Trajectory) -> Result<Vec<f64>> {
    let spec = traj.problem();
    let min = spec.require_min_value()?;
    Ok((0..traj.len())
        .map(|i| spec.smooth_value(traj.position(i)) - min)
        .collect())
}

/// `Φ(x(t)) − min Φ`.
pub fn value_gap(traj: &Trajectory) -> Result<DiagnosticSeries> {
    Ok(DiagnosticSeries::new(
        "value_gap",
        traj.times().to_vec(),
        gaps(traj)?,
    ))
}

/// `‖ẋ(t)‖`.
pub fn speed(traj: &Trajectory) -> DiagnosticSeries {
    let values = (0..traj.len())
        .map(|i| linalg::norm(traj.velocity(i)))
        .collect();
    DiagnosticSeries::new("speed", traj.times().to_vec(), values)
}

/// `‖x(t) − z‖²`.
pub fn distance_sq(traj: &Trajectory, z: &[f64]) -> Result<DiagnosticSeries> {
    check_dim(traj.dim(), z.len())?;
    let values = (0..traj.len())
        .map(|i| linalg::dist_sq(traj.position(i), z))
        .collect();
    Ok(DiagnosticSeries::new(
        "distance_sq",
        traj.times().to_vec(),
        values,
    ))
}

fn check_params(traj: &Trajectory, params: &LyapunovParams) -> Result<()> {
    if params.alpha != traj.alpha() {
        return Err(Error::InvalidParameter(format!(
            "Lyapunov parameters use α = {} but the trajectory has α = {}",
            params.alpha,
            traj.alpha()
        )));
    }
    Ok(())
}

/// The Lyapunov function `E(t)` with its monotonicity check.
pub fn energy_e(traj: &Trajectory, z: &[f64], params: &LyapunovParams) -> Result<DiagnosticSeries> {
    check_params(traj, params)?;
    traj.problem().validate_minimizer(z)?;
    let g = gaps(traj)?;
    let values = (0..traj.len())
        .map(|i| params.energy(traj.times()[i], g[i], traj.position(i), traj.velocity(i), z))
        .collect();
    let tol = traj.integrator_tolerance();
    Ok(
        DiagnosticSeries::new("lyapunov_E", traj.times().to_vec(), values)
            .with_monotone_check(|v| continuous_slack(tol, v)),
    )
}

/// Global energy `W = Φ − min Φ + ½‖ẋ‖²`, checked with slack `10·tol`.
pub fn global_energy_w(traj: &Trajectory) -> Result<DiagnosticSeries> {
    let g = gaps(traj)?;
    let values = (0..traj.len())
        .map(|i| g[i] + 0.5 * linalg::norm_sq(traj.velocity(i)))
        .collect();
    let tol = traj.integrator_tolerance();
    Ok(
        DiagnosticSeries::new("global_energy_W", traj.times().to_vec(), values)
            .with_monotone_check(|_| 10.0 * tol),
    )
}

/// Largest discrepancy between `W(t_{i+1}) − W(t_i)` and the trapezoid rule for
/// `∫ (−(α/t)‖ẋ‖² + ⟨g, ẋ⟩) dt` over the same interval.
pub fn energy_balance_residual(traj: &Trajectory) -> Result<f64> {
    let w = global_energy_w(traj)?;
    let t = traj.times();
    let rate = |i: usize| {
        let v = traj.velocity(i);
        let g = traj.forcing().eval(t[i], traj.dim());
        -(traj.alpha() / t[i]) * linalg::norm_sq(v) + linalg::dot(&g, v)
    };
    Ok((1..traj.len())
        .map(|i| {
            let quad = 0.5 * (t[i] - t[i - 1]) * (rate(i - 1) + rate(i));
            ((w.values[i] - w.values[i - 1]) - quad).abs()
        })
        .fold(0.0, f64::max))
}

/// Scaled energy `Γ = t^{2p} W`; not monotone in general, so no check is recorded.
pub fn scaled_energy_gamma(traj: &Trajectory, p: f64) -> Result<DiagnosticSeries> {
    let w = global_energy_w(traj)?;
    Ok(
        DiagnosticSeries::new("scaled_energy_Gamma", w.times.clone(), w.values)
            .scaled(2.0 * p, "scaled_energy_Gamma"),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralKind {
    /// `∫ t^{2p−1} (Φ − min Φ) dt`.
    Values,
    /// `∫ t^p ‖ẋ‖² dt`.
    Speed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub kind: IntegralKind,
    pub p: f64,
    pub value: f64,
    /// `E_B(t0)/(α − 3p)` for `Values`.
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
}

fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2)
        .zip(f.windows(2))
        .map(|(tt, ff)| 0.5 * (tt[1] - tt[0]) * (ff[0] + ff[1]))
        .sum()
}

/// Trapezoid quadrature of the weighted value gap or kinetic term over the horizon.
pub fn integral_estimate(
    traj: &Trajectory,
    p: f64,
    kind: IntegralKind,
) -> Result<IntegralEstimate> {
    let t = traj.times();
    match kind {
        IntegralKind::Values => {
            let params = LyapunovParams::new(Family::B, traj.alpha(), p)?;
            let g = gaps(traj)?;
            let f: Vec<f64> = t
                .iter()
                .zip(&g)
                .map(|(s, gi)| s.powf(2.0 * p - 1.0) * gi)
                .collect();
            let value = trapezoid(t, &f);
            let spec = traj.problem();
            let z = spec.require_argmin()?.project(traj.position(0));
            let e0 = params.energy(t[0], g[0], traj.position(0), traj.velocity(0), &z);
            let bound = e0 / (traj.alpha() - 3.0 * p);
            Ok(IntegralEstimate {
                kind,
                p,
                value,
                bound: Some(bound),
                within_bound: Some(value <= bound),
            })
        }
        IntegralKind::Speed => {
            let f: Vec<f64> = (0..traj.len())
                .map(|i| t[i].powf(p) * linalg::norm_sq(traj.velocity(i)))
                .collect();
            Ok(IntegralEstimate {
                kind,
                p,
                value: trapezoid(t, &f),
                bound: None,
                within_bound: None,
            })
        }
    }
}

/// `C = t0^{2α/3}(Φ(x0) − min Φ + ‖v0‖²) + (α(α + 1)/3) dist²(x0, argmin Φ)` for `α ≤ 3`.
pub fn rate_bound_constant(
    spec: &ProblemSpec,
    x0: &[f64],
    v0: &[f64],
    t0: f64,
    alpha: f64,
) -> Result<f64> {
    check_dim(spec.dim(), x0.len())?;
    check_dim(spec.dim(), v0.len())?;
    if !(alpha > 0.0 && alpha <= 3.0) {
        return Err(Error::InvalidParameter(format!(
            "rate constant needs 0 < α ≤ 3, got {alpha}; use the p = 1 energy E(t0) instead"
        )));
    }
    if !(t0 > 0.0) {
        return Err(Error::InvalidParameter(format!("t0 must be > 0, got {t0}")));
    }
    let min = spec.require_min_value()?;
    let d = spec.require_argmin()?.dist(x0);
    let gap = spec.smooth_value(x0) + spec.nonsmooth_value(x0) - min;
    Ok(t0.powf(2.0 * alpha / 3.0) * (gap + linalg::norm_sq(v0))
        + alpha * (alpha + 1.0) / 3.0 * d * d)
}
