//! Decay-exponent fits and verification of rate bounds for trajectories and iterates.

mod fit;
mod loops;
mod perturbed;

pub use fit::{
    fit_power_law, measure_decay, DecayMeasurement, FitMode, PowerLawFit, MIN_FIT_SAMPLES,
};
pub use loops::{
    discrete_loop_decrement, loop_decrement, search_loop_start, LoopReport, LoopSearch,
    CONTINUOUS_LOOP_TOLERANCE, DISCRETE_PASS_TOLERANCE,
};
pub use perturbed::{
    forcing_weight_integral, gronwall_check, perturbed_bound_constant, perturbed_energy,
    verify_perturbed_rate, verify_perturbed_rate_discrete, GronwallCheck,
};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticSeries, LyapunovParams};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::ifb::IterateLog;
use crate::linalg;

/// Relative slack on bound comparisons.
pub const BOUND_SLACK: f64 = 0.01;
/// Allowed growth of the supremum from the lower to the upper half of a tail window.
pub const TAIL_GROWTH: f64 = 1.1;

/// Outcome of one rate verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub quantity: String,
    pub alpha: f64,
    /// Power `q` in the monitored series `t^q · quantity`.
    pub scaling: f64,
    /// Guaranteed decay exponent of the quantity.
    pub theoretical_exponent: f64,
    /// Fitted log-log slope of the quantity on `window`.
    pub fitted_exponent: Option<f64>,
    pub fitted_halfwidth: Option<f64>,
    /// The quantity is exactly zero at the end of the window.
    pub extinct: bool,
    /// `fitted_exponent ≤ −theoretical_exponent + 0.1`.
    pub fit_consistent: Option<bool>,
    pub bound_constant: Option<f64>,
    /// Supremum of the scaled series over all samples.
    pub observed_sup: f64,
    /// Supremum of the scaled series over the tail window.
    pub tail_sup: f64,
    pub bound_satisfied: Option<bool>,
    /// Supremum over the upper half of `window` is at most 1.1 times the lower half.
    pub tail_bounded: Option<bool>,
    /// Supremum over the upper half of `window` is strictly below the lower half.
    pub little_o: Option<bool>,
    /// Whether the flags above are assertions rather than observations.
    pub asserted: bool,
    pub window: (f64, f64),
    pub tail_window: (f64, f64),
    pub notes: Vec<String>,
}

impl RateReport {
    fn new(
        quantity: &str,
        alpha: f64,
        scaling: f64,
        theoretical_exponent: f64,
        window: (f64, f64),
    ) -> Self {
        Self {
            quantity: quantity.into(),
            alpha,
            scaling,
            theoretical_exponent,
            fitted_exponent: None,
            fitted_halfwidth: None,
            extinct: false,
            fit_consistent: None,
            bound_constant: None,
            observed_sup: 0.0,
            tail_sup: 0.0,
            bound_satisfied: None,
            tail_bounded: None,
            little_o: None,
            asserted: true,
            window,
            tail_window: window,
            notes: Vec::new(),
        }
    }

    /// True unless an asserted check failed.
    pub fn passed(&self) -> bool {
        !self.asserted || (self.bound_satisfied != Some(false) && self.tail_bounded != Some(false))
    }

    /// Failed assertions as human-readable lines.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.asserted {
            return out;
        }
        if self.bound_satisfied == Some(false) {
            out.push(format!(
                "{} (α = {}): sup t^{} · value = {:.6e} exceeds bound {:.6e}",
                self.quantity,
                self.alpha,
                self.scaling,
                self.observed_sup,
                self.bound_constant.unwrap_or(f64::NAN)
            ));
        }
        if self.tail_bounded == Some(false) {
            out.push(format!(
                "{} (α = {}): scaled series grows over the tail window {:?}",
                self.quantity, self.alpha, self.window
            ));
        }
        out
    }

    fn record_fit(&mut self, series: &DiagnosticSeries, mode: FitMode) {
        match measure_decay(series, self.window, mode) {
            Ok(m) => {
                self.extinct = matches!(m, DecayMeasurement::Extinct { .. });
                self.fitted_exponent = Some(m.exponent());
                self.fitted_halfwidth = Some(m.halfwidth());
                self.fit_consistent = Some(m.exponent() <= -self.theoretical_exponent + 0.1);
                if let DecayMeasurement::Extinct { since } = m {
                    self.notes
                        .push(format!("identically zero from t = {since:.6e}"));
                }
            }
            Err(e) => self.notes.push(format!("no fit: {e}")),
        }
    }

    fn record_tail(&mut self, scaled: &DiagnosticSeries, tail: (f64, f64)) {
        self.tail_window = tail;
        self.observed_sup = scaled.sup();
        self.tail_sup = scaled.sup_on(tail.0, tail.1);
        let (lower, upper) = halves(scaled, self.window);
        self.tail_bounded = Some(upper.is_finite() && upper <= TAIL_GROWTH * lower);
        if self.tail_bounded == Some(true) && lower == 0.0 {
            self.tail_bounded = Some(upper == 0.0);
        }
        self.little_o = Some(upper < lower || (upper == 0.0 && lower == 0.0));
    }
}

/// Suprema over the lower and upper halves of `window` in `log t`.
fn halves(series: &DiagnosticSeries, window: (f64, f64)) -> (f64, f64) {
    let mid = (window.0 * window.1).sqrt();
    (series.sup_on(window.0, mid), series.sup_on(mid, window.1))
}

/// Window and fit settings for rate verification.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    /// Fit and growth window; defaults to the last two decades of the horizon.
    pub window: Option<(f64, f64)>,
    pub mode: FitMode,
}

impl RateOptions {
    pub fn window(mut self, lo: f64, hi: f64) -> Self {
        self.window = Some((lo, hi));
        self
    }

    pub fn mode(mut self, mode: FitMode) -> Self {
        self.mode = mode;
        self
    }

    fn resolve(&self, t0: f64, t_end: f64) -> Result<(f64, f64)> {
        let w = self.window.unwrap_or(((t_end / 100.0).max(t0), t_end));
        if !(w.0 >= t0 * (1.0 - 1e-12) && w.1 <= t_end * (1.0 + 1e-12) && w.0 < w.1) {
            return Err(Error::InvalidParameter(format!(
                "window {w:?} outside the data range ({t0}, {t_end})"
            )));
        }
        Ok(w)
    }
}

/// Last decade of a horizon, clipped to its start.
pub fn tail_window(start: f64, end: f64) -> (f64, f64) {
    ((end / 10.0).max(start), end)
}

/// Guaranteed value-decay exponent `min(2α/3, 2)`.
pub fn value_rate_exponent(alpha: f64) -> f64 {
    (2.0 * alpha / 3.0).min(2.0)
}

/// Checks `t^{2α/3}(Φ − min Φ) ≤ C` for `α ≤ 3`, or `t²(Φ − min Φ) ≤ E(t0)` with
/// the `p = 1` energy for `α > 3`, and fits the value decay.
pub fn verify_value_rate(traj: &Trajectory, opts: &RateOptions) -> Result<RateReport> {
    let spec = traj.problem();
    let alpha = traj.alpha();
    let gap = diagnostics::value_gap(traj)?;
    let window = opts.resolve(traj.t0(), traj.t_end())?;
    let theoretical = value_rate_exponent(alpha);
    let mut report = RateReport::new("value_gap", alpha, theoretical, theoretical, window);
    let (x0, v0) = (traj.position(0), traj.velocity(0));
    let bound = if alpha <= 3.0 {
        diagnostics::rate_bound_constant(spec, x0, v0, traj.t0(), alpha)?
    } else {
        let params = LyapunovParams::family_a(alpha)?;
        let z = spec.require_argmin()?.project(x0);
        params.energy(traj.t0(), gap.values[0], x0, v0, &z)
    };
    let scaled = gap.scaled(theoretical, "scaled_value_gap");
    report.record_tail(&scaled, tail_window(traj.t0(), traj.t_end()));
    report.bound_constant = Some(bound);
    report.bound_satisfied = Some(report.observed_sup <= bound * (1.0 + BOUND_SLACK) + 1e-300);
    if alpha <= 3.0 {
        report.little_o = None;
    } else {
        report
            .notes
            .push("little-o proxy: supremum decreases across the window halves".into());
    }
    report.record_fit(&gap, opts.mode);
    Ok(report)
}

/// Checks boundedness of `k^p(Θ(x_k) − min Θ)` over `k ∈ [K/10, K]` for `p < 2α/3`
/// (`p ≤ 2` when `α > 3`); the fitted exponent is reported only.
pub fn verify_value_rate_discrete(log: &IterateLog, p: f64) -> Result<RateReport> {
    let alpha = log.alpha();
    let admissible = if alpha <= 3.0 {
        p < 2.0 * alpha / 3.0
    } else {
        p <= 2.0
    };
    if !(p > 0.0 && admissible) {
        return Err(Error::InvalidParameter(format!(
            "discrete rate exponent p = {p} not admissible for α = {alpha}"
        )));
    }
    let big_k = log.iterations();
    if big_k < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 iterations, got {big_k}"
        )));
    }
    let spec = log.problem();
    let x_star = spec.require_argmin()?.project(log.x(big_k));
    let floor = roundoff_gap_floor(spec.lipschitz(), spec.require_min_value()?, &x_star);
    let mut floored = 0;
    let gaps: Vec<f64> = log.gaps()?[1..]
        .iter()
        .map(|g| {
            if *g <= floor {
                floored += 1;
                0.0
            } else {
                *g
            }
        })
        .collect();
    let ks: Vec<f64> = (1..=big_k).map(|k| k as f64).collect();
    let series = DiagnosticSeries::new("value_gap", ks, gaps);
    let window = (big_k as f64 / 10.0, big_k as f64);
    let mut report = RateReport::new("discrete_value_gap", alpha, p, p, window);
    let scaled = series.scaled(p, "scaled_value_gap");
    report.record_tail(&scaled, window);
    report.observed_sup = report.tail_sup;
    report.little_o = None;
    report.bound_constant = Some(report.tail_sup);
    report.bound_satisfied = Some(report.tail_sup.is_finite());
    report.record_fit(&series, FitMode::Direct);
    report.fit_consistent = None;
    report.notes.push(format!(
        "conjectured exponent {:.4}, reported only",
        -2.0 * alpha / 3.0
    ));
    if floored > 0 {
        report.notes.push(format!(
            "{floored} gaps at or below the round-off floor {floor:.3e} treated as zero"
        ));
    }
    Ok(report)
}

/// Smallest resolvable value gap: `16(ε|min Θ| + L ε²(1 + ‖x*‖)²)`, covering the
/// cancellation in `Θ(x) − min Θ` and iterates that stall one ulp from `x*`.
pub fn roundoff_gap_floor(lipschitz: f64, min_value: f64, x_star: &[f64]) -> f64 {
    let eps = f64::EPSILON;
    let scale = 1.0 + linalg::norm(x_star);
    16.0 * (eps * min_value.abs() + lipschitz * eps * eps * scale * scale)
}

/// Speed exponent asserted by [`verify_speed_rate`]: `1` for `α ≥ 3`, `(α − 1)/2 − 0.05` below.
pub fn speed_rate_exponent(alpha: f64) -> f64 {
    if alpha >= 3.0 {
        1.0
    } else {
        (alpha - 1.0) / 2.0 - 0.05
    }
}

/// Checks boundedness of `t^q ‖ẋ‖` on the tail; for `α < 1` the result is reported only.
pub fn verify_speed_rate(traj: &Trajectory, opts: &RateOptions) -> Result<RateReport> {
    let alpha = traj.alpha();
    let q = speed_rate_exponent(alpha);
    let window = opts.resolve(traj.t0(), traj.t_end())?;
    let speed = diagnostics::speed(traj);
    let mut report = RateReport::new("speed", alpha, q.max(0.0), q.max(0.0), window);
    if alpha < 1.0 {
        report.asserted = false;
        report
            .notes
            .push("no pointwise speed rate for α < 1; reported only".into());
    }
    let scaled = speed.scaled(report.scaling, "scaled_speed");
    report.record_tail(&scaled, tail_window(traj.t0(), traj.t_end()));
    if alpha <= 3.0 {
        report.little_o = None;
    }
    report.record_fit(&speed, opts.mode);
    Ok(report)
}

/// Value, distance and speed reports under a strong minimum, plus the count of
/// samples violating `‖x − x*‖² ≤ (2/μ)(Φ(x) − min Φ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongMinReport {
    pub values: RateReport,
    pub distance: RateReport,
    pub speed: RateReport,
    pub inequality_violations: usize,
}

impl StrongMinReport {
    pub fn passed(&self) -> bool {
        self.values.passed()
            && self.distance.passed()
            && self.speed.passed()
            && self.inequality_violations == 0
    }
}

/// Rates `t^{−2α/3}` for values and squared distance and `t^{−α/3}` for speed.
pub fn strong_min_rates(traj: &Trajectory, opts: &RateOptions) -> Result<StrongMinReport> {
    let spec = traj.problem();
    let mu = spec.require_strong_min()?;
    let set = spec.require_argmin()?;
    let alpha = traj.alpha();
    let window = opts.resolve(traj.t0(), traj.t_end())?;
    let tail = tail_window(traj.t0(), traj.t_end());
    let r = 2.0 * alpha / 3.0;
    let constant = if alpha <= 3.0 {
        Some(diagnostics::rate_bound_constant(
            spec,
            traj.position(0),
            traj.velocity(0),
            traj.t0(),
            alpha,
        )?)
    } else {
        None
    };

    let gap = diagnostics::value_gap(traj)?;
    let mut values = RateReport::new("strong_min_value_gap", alpha, r, r, window);
    values.record_tail(&gap.scaled(r, "scaled"), tail);
    values.little_o = None;
    values.bound_constant = constant;
    values.bound_satisfied = constant.map(|c| values.observed_sup <= c * (1.0 + BOUND_SLACK));
    values.record_fit(&gap, opts.mode);

    let dist: Vec<f64> = (0..traj.len())
        .map(|i| set.dist(traj.position(i)).powi(2))
        .collect();
    let dist = DiagnosticSeries::new("distance_sq", traj.times().to_vec(), dist);
    let mut distance = RateReport::new("strong_min_distance_sq", alpha, r, r, window);
    distance.record_tail(&dist.scaled(r, "scaled"), tail);
    distance.little_o = None;
    distance.bound_constant = constant.map(|c| 2.0 / mu * c);
    distance.bound_satisfied = distance
        .bound_constant
        .map(|c| distance.observed_sup <= c * (1.0 + BOUND_SLACK));
    distance.record_fit(&dist, opts.mode);

    let sp = diagnostics::speed(traj);
    let mut speed = RateReport::new("strong_min_speed", alpha, alpha / 3.0, alpha / 3.0, window);
    speed.record_tail(&sp.scaled(alpha / 3.0, "scaled"), tail);
    speed.little_o = None;
    speed.record_fit(&sp, opts.mode);

    let inequality_violations = gap
        .values
        .iter()
        .zip(&dist.values)
        .filter(|(g, d)| **d > 2.0 / mu * **g * (1.0 + 1e-9) + 1e-14)
        .count();
    Ok(StrongMinReport {
        values,
        distance,
        speed,
        inequality_violations,
    })
}
