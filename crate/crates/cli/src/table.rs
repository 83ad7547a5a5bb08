use std::fmt::Write;

use avd_core::diagnostics::IntegralEstimate;
use avd_core::io::fmt_num;
use avd_core::rates::{value_rate_exponent, RateReport};

use crate::experiment::AlphaSummary;

/// Column names of the regime table.
pub const COLUMNS: [&str; 16] = [
    "alpha",
    "regime",
    "source",
    "theoretical_exponent",
    "measured_exponent",
    "measured_halfwidth",
    "bound_pass",
    "little_o_claimed",
    "little_o_observed",
    "speed_exponent",
    "speed_pass",
    "p",
    "i_p",
    "i_p_finite",
    "j_p",
    "j_p_finite",
];

fn regime(alpha: f64) -> &'static str {
    if alpha < 3.0 {
        "subcritical"
    } else if alpha == 3.0 {
        "critical"
    } else {
        "supercritical"
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_num)
}

fn opt_flag(x: Option<bool>) -> String {
    x.map_or_else(String::new, |b| b.to_string())
}

fn integral_cells(e: Option<&IntegralEstimate>) -> (String, String) {
    match e {
        Some(e) => {
            let finite = e.value.is_finite() && e.within_bound != Some(false);
            (fmt_num(e.value), finite.to_string())
        }
        None => (String::new(), String::new()),
    }
}

/// One table row from a value report and, when available, the speed report and
/// the two integral estimates.
pub fn regime_row(
    value: &RateReport,
    source: &str,
    speed: Option<&RateReport>,
    values_integral: Option<&IntegralEstimate>,
    speed_integral: Option<&IntegralEstimate>,
) -> String {
    let alpha = value.alpha;
    let (ip, ip_ok) = integral_cells(values_integral);
    let (jp, jp_ok) = integral_cells(speed_integral);
    let p = values_integral.or(speed_integral).map(|e| e.p);
    let cells = [
        alpha.to_string(),
        regime(alpha).to_string(),
        source.to_string(),
        fmt_num(value_rate_exponent(alpha)),
        opt_num(value.fitted_exponent),
        opt_num(value.fitted_halfwidth),
        value.passed().to_string(),
        (alpha > 3.0).to_string(),
        opt_flag(value.little_o),
        opt_num(speed.map(|s| s.scaling)),
        opt_flag(speed.map(|s| s.passed())),
        opt_num(p),
        ip,
        ip_ok,
        jp,
        jp_ok,
    ];
    cells.join(",")
}

/// CSV with one row per α: guaranteed exponent `min(2α/3, 2)`, fitted exponent,
/// bound check, little-o flags, speed check and the integral estimates.
/// Continuous results are preferred; discrete-only runs use the discrete report.
pub fn report_regime_table(summaries: &[AlphaSummary]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for s in summaries {
        let row = match (&s.continuous, &s.discrete) {
            (Some(c), _) => regime_row(
                &c.value,
                "continuous",
                Some(&c.speed),
                Some(&c.values_integral),
                Some(&c.speed_integral),
            ),
            (None, Some(d)) => regime_row(&d.value, "discrete", None, None, None),
            (None, None) => continue,
        };
        let _ = writeln!(out, "{row}");
    }
    out
}
