//! Adaptive integration of `ẍ + (α/t)ẋ + ∇Φ(x) = g(t)` as the first-order
//! system `ẋ = v`, `v̇ = −(α/t)v − ∇Φ(x) + g(t)`.

mod events;
mod forcing;
mod rk;
mod trajectory;

pub use events::{crossing_events, Boundary, CrossingEvent, Direction};
pub use forcing::Forcing;
pub use trajectory::Trajectory;

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::problems::ProblemSpec;
use trajectory::DenseOutput;

/// Density of the log-uniform output grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPolicy {
    /// Minimum number of samples per decade.
    pub samples_per_decade: usize,
    /// Upper bound on the spacing between consecutive samples near `t_end`.
    pub max_spacing: f64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            samples_per_decade: 200,
            max_spacing: 0.25,
        }
    }
}

impl GridPolicy {
    /// Log-uniform grid on `[t0, t_end]` with exact endpoints.
    pub fn grid(&self, t0: f64, t_end: f64) -> Vec<f64> {
        let ratio = (t_end / t0).ln();
        let by_decade = (self.samples_per_decade as f64 * ratio / std::f64::consts::LN_10).ceil();
        let by_spacing = (t_end * ratio / self.max_spacing).ceil();
        let n = by_decade.max(by_spacing).max(2.0) as usize;
        let mut g: Vec<f64> = (0..=n)
            .map(|i| t0 * (ratio * i as f64 / n as f64).exp())
            .collect();
        g[0] = t0;
        g[n] = t_end;
        g.dedup_by(|b, a| *b <= *a);
        g
    }
}

/// Inputs of one integration.
#[derive(Clone, Debug)]
pub struct IntegrationConfig {
    pub alpha: f64,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub t0: f64,
    pub t_end: f64,
    /// Per-step local error target, used as both absolute and relative tolerance.
    pub tol: f64,
    pub forcing: Forcing,
    pub grid: GridPolicy,
    /// `‖x‖` above which the run is aborted.
    pub blowup_cap: f64,
    pub max_steps: usize,
    /// Disables step control and uses this constant step instead.
    pub fixed_step: Option<f64>,
}

impl IntegrationConfig {
    pub fn new(alpha: f64, x0: Vec<f64>, v0: Vec<f64>) -> Self {
        Self {
            alpha,
            x0,
            v0,
            t0: 1.0,
            t_end: 1e3,
            tol: 1e-9,
            forcing: Forcing::Zero,
            grid: GridPolicy::default(),
            blowup_cap: 1e8,
            max_steps: 50_000_000,
            fixed_step: None,
        }
    }

    pub fn t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn grid(mut self, grid: GridPolicy) -> Self {
        self.grid = grid;
        self
    }

    pub fn fixed_step(mut self, h: f64) -> Self {
        self.fixed_step = Some(h);
        self
    }

    fn validate(&self, spec: &ProblemSpec) -> Result<()> {
        if spec.has_nonsmooth() {
            return Err(Error::NonsmoothDynamics);
        }
        check_dim(spec.dim(), self.x0.len())?;
        check_dim(spec.dim(), self.v0.len())?;
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("damping exponent must be finite and > 0");
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return bad("t0 must be finite and > 0");
        }
        if !(self.t_end > self.t0 && self.t_end.is_finite()) {
            return bad("t_end must be finite and > t0");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tolerance must be finite and > 0");
        }
        if !(self.grid.max_spacing > 0.0) || self.grid.samples_per_decade == 0 {
            return bad("grid policy needs positive spacing and samples per decade");
        }
        if let Some(h) = self.fixed_step {
            if !(h > 0.0 && h.is_finite()) {
                return bad("fixed step must be finite and > 0");
            }
        }
        if !linalg::all_finite(&self.x0) || !linalg::all_finite(&self.v0) {
            return Err(Error::NonFinite("initial state".into()));
        }
        self.forcing.validate(spec.dim())
    }
}

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn initial_step<F>(f: &mut F, t0: f64, y: &[f64], f0: &[f64], tol: f64, span: f64) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len() as f64;
    let sc: Vec<f64> = y.iter().map(|v| tol + tol * v.abs()).collect();
    let rms = |v: &[f64]| {
        (v.iter()
            .zip(&sc)
            .map(|(a, s)| (a / s) * (a / s))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let (d0, d1) = (rms(y), rms(f0));
    let h0 = if d0 < 1e-10 || d1 < 1e-10 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
    .min(span);
    let y1 = linalg::axpy(y, h0, f0);
    let mut f1 = vec![0.0; y.len()];
    f(t0 + h0, &y1, &mut f1);
    let d2 = rms(&linalg::sub(&f1, f0)) / h0;
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / m).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates the damped inertial system and resamples it on a log-uniform grid.
pub fn integrate(spec: &ProblemSpec, cfg: &IntegrationConfig) -> Result<Trajectory> {
    cfg.validate(spec)?;
    let n = spec.dim();
    let alpha = cfg.alpha;
    let forcing = cfg.forcing.clone();
    let mut rhs = |t: f64, y: &[f64], out: &mut [f64]| {
        let (x, v) = y.split_at(n);
        let grad = spec.gradient(x);
        out[..n].copy_from_slice(v);
        for i in 0..n {
            out[n + i] = -(alpha / t) * v[i] - grad[i];
        }
        forcing.add_to(t, &mut out[n..]);
    };

    let kinks = spec.kinks();
    let mut t = cfg.t0;
    let mut y = [cfg.x0.as_slice(), cfg.v0.as_slice()].concat();
    let mut k1 = vec![0.0; 2 * n];
    rhs(t, &y, &mut k1);
    let span = cfg.t_end - cfg.t0;
    let mut h = match cfg.fixed_step {
        Some(h) => h,
        None => initial_step(&mut rhs, t, &y, &k1, cfg.tol, span),
    };
    let mut dense = DenseOutput::new(2 * n);
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut attempts = 0usize;

    while t < cfg.t_end {
        attempts += 1;
        if attempts > cfg.max_steps {
            return Err(Error::Integrator {
                t,
                reason: format!("exceeded {} step attempts", cfg.max_steps),
            });
        }
        let last = t + h >= cfg.t_end - 1e-14 * cfg.t_end;
        let h_try = if last { cfg.t_end - t } else { h };
        if !(h_try > 1e-14 * t.max(1.0)) {
            return Err(Error::Integrator {
                t,
                reason: format!("step size underflow (h = {h_try:e})"),
            });
        }
        let trial = rk::step(&mut rhs, t, &y, &k1, h_try);
        if !linalg::all_finite(&trial.y_new) {
            return Err(Error::NonFinite(format!("state after step at t = {t}")));
        }
        let accepted = match cfg.fixed_step {
            Some(_) => true,
            None => {
                let err = rk::error_norm(&trial.err, &y, &trial.y_new, cfg.tol);
                if err <= 1.0 {
                    if let Some(theta) = kink_crossing(&kinks, &y, &trial.dense, n) {
                        if theta < 1.0 - 1e-9 && theta * h_try > 1e-10 * t.max(1.0) {
                            h = theta * h_try;
                            continue;
                        }
                    }
                }
                let fac11 = err.powf(0.2 - BETA * 0.75);
                if err <= 1.0 {
                    let fac =
                        (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                    let mut h_new = h_try / fac;
                    if last_rejected {
                        h_new = h_new.min(h_try);
                    }
                    fac_old = err.max(1e-4);
                    h = h_new;
                    last_rejected = false;
                    true
                } else {
                    h = h_try / (fac11 / SAFETY).min(1.0 / FAC_MIN);
                    last_rejected = true;
                    false
                }
            }
        };
        if !accepted {
            continue;
        }
        dense.push(t, h_try, &trial.dense);
        t = if last { cfg.t_end } else { t + h_try };
        y = trial.y_new;
        k1 = trial.k7;
        let xn = linalg::norm(&y[..n]);
        if xn > cfg.blowup_cap {
            return Err(Error::BlowUp { t, norm: xn });
        }
    }

    let times = cfg.grid.grid(cfg.t0, cfg.t_end);
    let mut positions = Vec::with_capacity(times.len() * n);
    let mut velocities = Vec::with_capacity(times.len() * n);
    let mut buf = vec![0.0; 2 * n];
    let mut j = 0;
    for &s in &times {
        while j + 1 < dense.len() && dense.starts[j + 1] <= s {
            j += 1;
        }
        dense.eval_in(j, s, &mut buf);
        positions.extend_from_slice(&buf[..n]);
        velocities.extend_from_slice(&buf[n..]);
    }
    // The first sample is the exact initial state.
    positions[..n].copy_from_slice(&cfg.x0);
    velocities[..n].copy_from_slice(&cfg.v0);
    Ok(Trajectory::from_parts(
        spec.clone(),
        alpha,
        cfg.tol,
        cfg.forcing.clone(),
        times,
        positions,
        velocities,
        Some(dense),
    ))
}

const KINK_PROBES: usize = 8;

/// Fraction of the step at which the dense interpolant first crosses a kink
/// hyperplane, just past the crossing.
fn kink_crossing(kinks: &[(usize, f64)], y: &[f64], coeffs: &[f64], n: usize) -> Option<f64> {
    if kinks.is_empty() {
        return None;
    }
    let mut buf = vec![0.0; 2 * n];
    let mut at = |theta: f64, axis: usize| {
        rk::dense_eval(coeffs, 2 * n, theta, &mut buf);
        buf[axis]
    };
    let mut first: Option<f64> = None;
    for &(axis, c) in kinks {
        let mut prev = (0.0, y[axis] - c);
        if prev.1 == 0.0 {
            continue;
        }
        for j in 1..=KINK_PROBES {
            let theta = j as f64 / KINK_PROBES as f64;
            let d = at(theta, axis) - c;
            if d == 0.0 || d.signum() != prev.1.signum() {
                let (mut lo, mut hi) = (prev.0, theta);
                while hi - lo > 1e-12 {
                    let mid = 0.5 * (lo + hi);
                    if (at(mid, axis) - c).signum() == prev.1.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                first = Some(first.map_or(hi, |f: f64| f.min(hi)));
                break;
            }
            prev = (theta, d);
        }
    }
    first
}
