use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::diagnostics::DiagnosticSeries;
use crate::error::{Error, Result};

/// Minimum number of points in a fit.
pub const MIN_FIT_SAMPLES: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// Every sample in the window.
    Direct,
    /// Strict local maxima only, refined by a parabola through each peak.
    Envelope,
    /// Envelope when the window holds zeros or enough local maxima, direct otherwise.
    #[default]
    Auto,
}

/// Least-squares slope of `log value` against `log t` with a 95% confidence halfwidth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub halfwidth: f64,
    pub samples: usize,
    pub mode: FitMode,
}

/// Outcome of a decay measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DecayMeasurement {
    Fitted(PowerLawFit),
    /// The series is exactly zero from `since` to the end of the window.
    Extinct {
        since: f64,
    },
}

impl DecayMeasurement {
    /// Fitted slope, or `−∞` for an extinct series.
    pub fn exponent(&self) -> f64 {
        match self {
            DecayMeasurement::Fitted(f) => f.exponent,
            DecayMeasurement::Extinct { .. } => f64::NEG_INFINITY,
        }
    }

    pub fn halfwidth(&self) -> f64 {
        match self {
            DecayMeasurement::Fitted(f) => f.halfwidth,
            DecayMeasurement::Extinct { .. } => 0.0,
        }
    }
}

fn window_points(series: &DiagnosticSeries, window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Fit(format!("invalid window ({lo}, {hi})")));
    }
    let first = series.times.first().copied().unwrap_or(f64::NAN);
    let last = series.times.last().copied().unwrap_or(f64::NAN);
    if lo < first * (1.0 - 1e-12) || hi > last * (1.0 + 1e-12) {
        return Err(Error::Fit(format!(
            "window ({lo}, {hi}) outside data range ({first}, {last})"
        )));
    }
    Ok(series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(t, v)| (*t, *v))
        .collect())
}

fn peaks(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points
        .windows(3)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 >= w[2].1 && w[1].1 > 0.0)
        .map(|w| {
            let (t0, v0) = w[0];
            let (t1, v1) = w[1];
            let (t2, v2) = w[2];
            // Vertex of the parabola through the three samples.
            let d01 = (v1 - v0) / (t1 - t0);
            let d12 = (v2 - v1) / (t2 - t1);
            let curv = (d12 - d01) / (t2 - t0);
            if curv < 0.0 {
                let tv = 0.5 * (t0 + t1) - d01 / (2.0 * curv);
                let tv = tv.clamp(t0, t2);
                let vv = v1 + d01 * (tv - t1) + curv * (tv - t0) * (tv - t1);
                (tv, vv.max(v1))
            } else {
                (t1, v1)
            }
        })
        .collect()
}

fn regress(points: &[(f64, f64)], mode: FitMode) -> Result<PowerLawFit> {
    let n = points.len();
    if n < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "{n} points in window, need at least {MIN_FIT_SAMPLES}"
        )));
    }
    if let Some(p) = points.iter().find(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return Err(Error::Fit(format!(
            "nonpositive value {} at t = {}",
            p.1, p.0
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let se = (rss / (nf - 2.0) / sxx).sqrt();
    let quantile = StudentsT::new(0.0, 1.0, nf - 2.0)
        .map_err(|e| Error::Fit(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(PowerLawFit {
        exponent: slope,
        halfwidth: quantile * se,
        samples: n,
        mode,
    })
}

/// Fits `value ≈ c t^{exponent}` on `window`.
pub fn fit_power_law(
    series: &DiagnosticSeries,
    window: (f64, f64),
    mode: FitMode,
) -> Result<PowerLawFit> {
    let points = window_points(series, window)?;
    match mode {
        FitMode::Direct => regress(&points, FitMode::Direct),
        FitMode::Envelope => regress(&peaks(&points), FitMode::Envelope),
        FitMode::Auto => {
            let pk = peaks(&points);
            if pk.len() >= MIN_FIT_SAMPLES || points.iter().any(|p| p.1 <= 0.0) {
                regress(&pk, FitMode::Envelope)
            } else {
                regress(&points, FitMode::Direct)
            }
        }
    }
}

/// Like [`fit_power_law`], but reports a series that is identically zero on the
/// last quarter of the window (in `log t`) as extinct instead of failing.
pub fn measure_decay(
    series: &DiagnosticSeries,
    window: (f64, f64),
    mode: FitMode,
) -> Result<DecayMeasurement> {
    let points = window_points(series, window)?;
    let (lo, hi) = window;
    let cut = lo * (hi / lo).powf(0.75);
    let tail_zero = points.iter().filter(|p| p.0 >= cut).all(|p| p.1 == 0.0);
    if tail_zero && points.iter().any(|p| p.0 >= cut) {
        let since = points
            .iter()
            .rev()
            .take_while(|p| p.1 == 0.0)
            .last()
            .map_or(hi, |p| p.0);
        return Ok(DecayMeasurement::Extinct { since });
    }
    fit_power_law(series, window, mode).map(DecayMeasurement::Fitted)
}
