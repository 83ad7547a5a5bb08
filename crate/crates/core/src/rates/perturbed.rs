use serde::{Deserialize, Serialize};

use super::{tail_window, RateOptions, RateReport, BOUND_SLACK};
use crate::diagnostics::{self, continuous_slack, DiagnosticSeries, Family, LyapunovParams};
use crate::dynamics::{Forcing, Trajectory};
use crate::error::{check_dim, Error, Result};
use crate::ifb::{IterateLog, Perturbation};
use crate::linalg;

fn cumulative_trapezoid(t: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..t.len() {
        acc += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
        out.push(acc);
    }
    out
}

/// `∫_{t0}^∞ t^p ‖g(t)‖ dt`, in closed form for power decay and by the trapezoid
/// rule on the table otherwise; infinite when the integral diverges.
pub fn forcing_weight_integral(forcing: &Forcing, p: f64, t0: f64) -> f64 {
    match forcing {
        Forcing::Zero => 0.0,
        Forcing::PowerDecay { c, q, direction } => {
            if *c == 0.0 {
                0.0
            } else if q - p > 1.0 {
                c.abs() * linalg::norm(direction) * t0.powf(p - q + 1.0) / (q - p - 1.0)
            } else {
                f64::INFINITY
            }
        }
        Forcing::Tabulated { times, values } => {
            let f: Vec<f64> = times
                .iter()
                .zip(values)
                .map(|(t, v)| t.powf(p) * linalg::norm(v))
                .collect();
            let mut total = 0.0;
            for i in 1..times.len() {
                let (a, b) = (times[i - 1], times[i]);
                if b <= t0 {
                    continue;
                }
                let lo = a.max(t0);
                let w = (lo - a) / (b - a);
                let f_lo = (1.0 - w) * f[i - 1] + w * f[i];
                total += 0.5 * (b - lo) * (f_lo + f[i]);
            }
            total
        }
    }
}

/// `E(t0) + M(√(2E(t0)) + M)` with `M = ∫ t^p‖g‖`: an upper bound on `t^{2p}(Φ − min Φ)`
/// along a forced trajectory, for family-A parameters with `ξ ≥ 0`.
pub fn perturbed_bound_constant(e0: f64, weight_integral: f64) -> f64 {
    let c = (2.0 * e0.max(0.0)).sqrt();
    e0 + weight_integral * (c + weight_integral)
}

/// Lyapunov function with the trailing forcing term
/// `E(t) + ∫_t^T ⟨λ(x − z) + s^p ẋ, s^p g(s)⟩ ds`, checked for monotonicity.
pub fn perturbed_energy(
    traj: &Trajectory,
    z: &[f64],
    params: &LyapunovParams,
) -> Result<DiagnosticSeries> {
    let base = diagnostics::energy_e(traj, z, params)?;
    let t = traj.times();
    let f: Vec<f64> = (0..traj.len())
        .map(|i| {
            let (x, v) = (traj.position(i), traj.velocity(i));
            let lam = params.lambda(t[i]);
            let tp = t[i].powf(params.p);
            let g = traj.forcing().eval(t[i], traj.dim());
            x.iter()
                .zip(v)
                .zip(z)
                .zip(&g)
                .map(|(((xi, vi), zi), gi)| (lam * (xi - zi) + tp * vi) * tp * gi)
                .sum()
        })
        .collect();
    let cum = cumulative_trapezoid(t, &f);
    let total = cum.last().copied().unwrap_or(0.0);
    let values = base
        .values
        .iter()
        .zip(&cum)
        .map(|(e, c)| e + (total - c))
        .collect();
    let tol = traj.integrator_tolerance();
    Ok(
        DiagnosticSeries::new("perturbed_lyapunov_E", t.to_vec(), values)
            .with_monotone_check(|v| continuous_slack(tol, v)),
    )
}

/// Checks `t^{2p}(Φ − min Φ)` under forcing with `∫ t^p ‖g‖ < ∞` against
/// [`perturbed_bound_constant`] and for growth on the tail.
pub fn verify_perturbed_rate(traj: &Trajectory, p: f64, opts: &RateOptions) -> Result<RateReport> {
    let forcing = traj.forcing();
    if !forcing.is_integrable_against(p) {
        return Err(Error::Precondition(format!(
            "forcing {forcing} is not integrable against t^{p}"
        )));
    }
    let alpha = traj.alpha();
    let params = LyapunovParams::new(Family::A, alpha, p)?;
    if params.xi(traj.t0()) < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "p = {p} gives ξ < 0 for α = {alpha}"
        )));
    }
    let window = opts.resolve(traj.t0(), traj.t_end())?;
    let spec = traj.problem();
    let gap = diagnostics::value_gap(traj)?;
    let (x0, v0) = (traj.position(0), traj.velocity(0));
    let z = spec.require_argmin()?.project(x0);
    let e0 = params.energy(traj.t0(), gap.values[0], x0, v0, &z);
    let m = forcing_weight_integral(forcing, p, traj.t0());
    let bound = perturbed_bound_constant(e0, m);

    let mut report = RateReport::new("perturbed_value_gap", alpha, 2.0 * p, 2.0 * p, window);
    report.record_tail(
        &gap.scaled(2.0 * p, "scaled"),
        tail_window(traj.t0(), traj.t_end()),
    );
    report.little_o = None;
    report.bound_constant = Some(bound);
    report.bound_satisfied = Some(report.observed_sup <= bound * (1.0 + BOUND_SLACK));
    report.notes.push(format!(
        "forcing {forcing}, ∫ t^p‖g‖ = {m:.6e}, E(t0) = {e0:.6e}"
    ));
    report.record_fit(&gap, opts.mode);
    Ok(report)
}

/// Checks boundedness of `k^p(Θ(x_k) − min Θ)` over `[K/10, K]` under perturbations
/// with `Σ k^p ‖g_k‖ < ∞`.
pub fn verify_perturbed_rate_discrete(
    log: &IterateLog,
    perturbation: &Perturbation,
    p: f64,
) -> Result<RateReport> {
    if !perturbation.is_summable_against(p) {
        return Err(Error::Precondition(format!(
            "perturbation is not summable against k^{p}"
        )));
    }
    perturbation.validate(log.dim())?;
    let mut report = super::verify_value_rate_discrete(log, p)?;
    report.quantity = "perturbed_discrete_value_gap".into();
    Ok(report)
}

/// Outcome of the quadratic Gronwall check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallCheck {
    /// `½w² ≤ ½c² + ∫ m w` at every sample.
    pub hypothesis_holds: bool,
    /// `|w| ≤ c + ∫ m` at every sample.
    pub conclusion_holds: bool,
    pub max_hypothesis_excess: f64,
    pub max_conclusion_excess: f64,
}

/// Verifies the quadratic Gronwall implication on sampled `m ≥ 0` and `w`,
/// with integrals from the first sample by the trapezoid rule.
pub fn gronwall_check(times: &[f64], m: &[f64], w: &[f64], c: f64) -> Result<GronwallCheck> {
    check_dim(times.len(), m.len())?;
    check_dim(times.len(), w.len())?;
    if times.len() < 2 || times.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::InvalidParameter(
            "need at least two increasing sample times".into(),
        ));
    }
    if m.iter().any(|v| !(*v >= 0.0)) || !(c >= 0.0) {
        return Err(Error::InvalidParameter(
            "Gronwall check needs m ≥ 0 and c ≥ 0".into(),
        ));
    }
    let mw: Vec<f64> = m.iter().zip(w).map(|(a, b)| a * b).collect();
    let int_mw = cumulative_trapezoid(times, &mw);
    let int_m = cumulative_trapezoid(times, m);
    let rel = |v: f64| 1e-9 * (1.0 + v.abs());
    let mut hyp = f64::NEG_INFINITY;
    let mut con = f64::NEG_INFINITY;
    for i in 0..times.len() {
        let rhs = 0.5 * c * c + int_mw[i];
        hyp = hyp.max(0.5 * w[i] * w[i] - rhs - rel(rhs));
        let bound = c + int_m[i];
        con = con.max(w[i].abs() - bound - rel(bound));
    }
    Ok(GronwallCheck {
        hypothesis_holds: hyp <= 0.0,
        conclusion_holds: con <= 0.0,
        max_hypothesis_excess: hyp.max(0.0),
        max_conclusion_excess: con.max(0.0),
    })
}
