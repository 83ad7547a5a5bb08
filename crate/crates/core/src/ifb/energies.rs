use serde::{Deserialize, Serialize};

use super::{anchor, discrete_slack, energy_w, IterateLog};
use crate::diagnostics::DiagnosticSeries;
use crate::error::{Error, Result};
use crate::linalg;

/// Consecutive nonincreasing steps required before an index counts as `K₀`.
pub const K0_WINDOW: usize = 100;

/// Outcome of the rate bound `s^p k^{2p}(Θ(x_k) − min Θ) ≤ Ẽ_{K₀} + sup_{j ≥ K₀} p s^{p−1} j^{2p−1}‖Δx_j‖²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    /// First index of the certified range, `max(K₀, first index with ξ ≥ 0 onwards)`.
    pub k_start: usize,
    pub bound: f64,
    pub max_scaled_gap: f64,
    pub holds: bool,
}

/// Discrete energy sequences indexed by `k = 0..=K`; entries before `first_k` are NaN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteEnergies {
    pub p: f64,
    pub first_k: usize,
    pub w: Vec<f64>,
    pub h: Vec<f64>,
    pub lambda: Vec<f64>,
    pub xi: Vec<f64>,
    /// `D_k = −2p(k+1)^{2p−2} − (1 − α/k)(k+1)^{2p−1} + k^{2p−1}` for `k ≥ 1`.
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub e_tilde: Vec<f64>,
    /// Critical-case energy, present when `α = 3`.
    pub e_crit: Option<Vec<f64>>,
    /// Smallest index from which `Ẽ_k` is nonincreasing to the end of the run.
    pub k0: Option<usize>,
    /// Smallest index from which `ξ_k ≥ 0` to the end of the run.
    pub xi_nonneg_from: Option<usize>,
    /// Indices `k ≥ xi_nonneg_from` where `E_k < s^p k^{2p}(Θ(x_k) − min Θ)`.
    pub minorization_failures: usize,
    pub certificate: Option<RateCertificate>,
}

/// Builds `W_k`, `h_k`, `λ_k`, `ξ_k`, `E_k`, `Ẽ_k` and locates `K₀`.
pub fn discrete_lyapunov(log: &IterateLog, z: &[f64], p: f64) -> Result<DiscreteEnergies> {
    let alpha = log.alpha();
    let upper = 1.0f64.min(alpha / 3.0).min((alpha + 1.0) / 4.0);
    if !(p > 0.0 && p < upper) {
        return Err(Error::InvalidParameter(format!(
            "Lyapunov exponent p = {p} outside (0, min(1, α/3, (α+1)/4)) = (0, {upper})"
        )));
    }
    log.problem().validate_minimizer(z)?;
    let s = log.step();
    let big_k = log.iterations();
    let w = energy_w(log)?;
    let h = anchor(log, z)?;
    let gaps = log.gaps()?;
    let c_lam = 2.0 * p * s.powf(-(1.0 - p) / 2.0);
    let s_half = s.powf((p - 1.0) / 2.0);
    let primary = p >= 0.5;
    let first_lambda = if primary { 1 } else { 2 };
    let first_k = first_lambda + 1;
    let kf = |k: usize| k as f64;

    let mut lambda = vec![f64::NAN; big_k + 1];
    for (k, l) in lambda.iter_mut().enumerate().skip(first_lambda) {
        *l = if primary {
            c_lam * kf(k).powf(p - 1.0)
        } else {
            c_lam * (kf(k) - 1.0).powf(2.0 * p - 1.0) / kf(k).powf(p)
        };
    }
    let mut xi = vec![f64::NAN; big_k + 1];
    for k in first_lambda..big_k {
        let a_k = log.momentum(k);
        xi[k + 1] = -lambda[k + 1].powi(2)
            - s_half * (a_k * lambda[k + 1] * kf(k + 1).powf(p) - lambda[k] * kf(k).powf(p));
    }
    let mut d = vec![f64::NAN; big_k + 1];
    for (k, dk) in d.iter_mut().enumerate().skip(1) {
        *dk = -2.0 * p * kf(k + 1).powf(2.0 * p - 2.0)
            - (1.0 - alpha / kf(k)) * kf(k + 1).powf(2.0 * p - 1.0)
            + kf(k).powf(2.0 * p - 1.0);
    }

    let mut e = vec![f64::NAN; big_k + 1];
    let mut e_tilde = vec![f64::NAN; big_k + 1];
    let correction =
        |k: usize| p * s.powf(p - 1.0) * kf(k).powf(2.0 * p - 1.0) * log.dx_norm(k).powi(2);
    for k in first_k..=big_k {
        e[k] = s.powf(p) * kf(k).powf(2.0 * p) * w[k]
            + s_half * lambda[k] * kf(k).powf(p) * (h[k] - h[k - 1])
            + (lambda[k].powi(2) + xi[k]) * h[k - 1];
        e_tilde[k] = e[k] - correction(k);
    }

    let mut k0 = Some(first_k);
    for k in (first_k..big_k).rev() {
        if e_tilde[k + 1] > e_tilde[k] + discrete_slack(e_tilde[k]) {
            k0 = Some(k + 1);
            break;
        }
    }
    let k0 = k0.filter(|k| big_k - k >= K0_WINDOW);
    let xi_nonneg_from = match (first_k..=big_k).rev().find(|&k| xi[k] < 0.0) {
        None => Some(first_k),
        Some(k) if k < big_k => Some(k + 1),
        Some(_) => None,
    };

    let scaled_gap = |k: usize| s.powf(p) * kf(k).powf(2.0 * p) * gaps[k];
    let minorization_failures = xi_nonneg_from.map_or(0, |from| {
        (from..=big_k)
            .filter(|&k| e[k] < scaled_gap(k) - discrete_slack(e[k]))
            .count()
    });
    let certificate = match (k0, xi_nonneg_from) {
        (Some(a), Some(b)) => {
            let k_start = a.max(b);
            let tail = k_start..=big_k;
            let bound = e_tilde[k_start] + tail.clone().map(correction).fold(0.0, f64::max);
            let max_scaled_gap = tail.map(scaled_gap).fold(0.0, f64::max);
            Some(RateCertificate {
                k_start,
                bound,
                max_scaled_gap,
                holds: max_scaled_gap <= bound + discrete_slack(bound),
            })
        }
        _ => None,
    };

    let e_crit = if alpha == 3.0 {
        let x_star = log.problem().require_argmin()?.project(z);
        Some(critical_values(log, &x_star)?)
    } else {
        None
    };

    Ok(DiscreteEnergies {
        p,
        first_k,
        w,
        h,
        lambda,
        xi,
        d,
        e,
        e_tilde,
        e_crit,
        k0,
        xi_nonneg_from,
        minorization_failures,
        certificate,
    })
}

fn critical_values(log: &IterateLog, x_star: &[f64]) -> Result<Vec<f64>> {
    let gaps = log.gaps()?;
    let s = log.step();
    let mut out = vec![f64::NAN; log.iterations() + 1];
    for (k, o) in out.iter_mut().enumerate().skip(1) {
        let half = (k as f64 - 1.0) / 2.0;
        let m: f64 = log
            .x(k)
            .iter()
            .zip(log.x(k - 1))
            .zip(x_star)
            .map(|((xk, xp), zs)| (xk - zs + half * (xk - xp)).powi(2))
            .sum();
        *o = s * (k as f64 + 1.0).powi(2) * gaps[k] + 2.0 * m;
    }
    Ok(out)
}

/// `E(k) = s(k+1)²(Θ(x_k) − min Θ) + 2‖x_k − x* + ((k−1)/2)(x_k − x_{k−1})‖²` for `k ≥ 1`.
pub fn critical_energy(log: &IterateLog, x_star: &[f64]) -> Result<DiagnosticSeries> {
    if log.alpha() != 3.0 {
        return Err(Error::Precondition(format!(
            "critical energy needs α = 3, got {}",
            log.alpha()
        )));
    }
    log.problem().validate_minimizer(x_star)?;
    let values = critical_values(log, x_star)?;
    let times = (1..=log.iterations()).map(|k| k as f64).collect();
    Ok(
        DiagnosticSeries::new("critical_energy", times, values[1..].to_vec())
            .with_monotone_check(discrete_slack),
    )
}

/// `(sup_k ‖x_k‖, sup_k k‖x_k − x_{k−1}‖)` over the run.
pub fn iterate_boundedness_check(log: &IterateLog) -> (f64, f64) {
    let sup_x = (0..=log.iterations())
        .map(|k| linalg::norm(log.x(k)))
        .fold(0.0, f64::max);
    let sup_v = (1..=log.iterations())
        .map(|k| k as f64 * log.dx_norm(k))
        .fold(0.0, f64::max);
    (sup_x, sup_v)
}

/// Traversal of `[a, b]` by consecutive iterates `x_{k_enter} … x_{k_exit}`, entered
/// from one side and left through the other.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretePass {
    pub k_enter: usize,
    pub k_exit: usize,
    /// Whether the pass goes from above `b` to below `a`.
    pub downward: bool,
    /// `|k (x_k − x_{k−1})|` at `k_enter`.
    pub scaled_enter: f64,
    /// `|k (x_k − x_{k−1})|` at `k_exit`.
    pub scaled_exit: f64,
    pub decrement: f64,
}

/// Detects full traversals of `[a, b]` by a one-dimensional run.
pub fn discrete_passes(log: &IterateLog, a: f64, b: f64) -> Result<Vec<DiscretePass>> {
    if log.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: log.dim(),
        });
    }
    if !(a < b) {
        return Err(Error::InvalidParameter(format!(
            "need a < b, got [{a}, {b}]"
        )));
    }
    let big_k = log.iterations();
    let x = |k: usize| log.x(k)[0];
    let inside = |k: usize| x(k) >= a && x(k) <= b;
    let scaled = |k: usize| (k as f64 * (x(k) - x(k - 1))).abs();
    let mut out = Vec::new();
    let mut k = 1;
    while k <= big_k {
        if inside(k) && !inside(k - 1) {
            let k_enter = k;
            while k <= big_k && inside(k) {
                k += 1;
            }
            if k > big_k {
                break;
            }
            let k_exit = k - 1;
            let (before, after) = (x(k_enter - 1), x(k_exit + 1));
            let downward = before > b && after < a;
            if downward || (before < a && after > b) {
                let (se, sx) = (scaled(k_enter), scaled(k_exit));
                out.push(DiscretePass {
                    k_enter,
                    k_exit,
                    downward,
                    scaled_enter: se,
                    scaled_exit: sx,
                    decrement: se - sx,
                });
            }
        } else {
            k += 1;
        }
    }
    Ok(out)
}
