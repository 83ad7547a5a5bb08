use serde::{Deserialize, Serialize};

use crate::dynamics::{crossing_events, integrate, CrossingEvent, Direction, IntegrationConfig};
use crate::error::{Error, Result};
use crate::ifb::DiscretePass;
use crate::problems::ProblemSpec;

/// Relative shortfall allowed on continuous loop decrements.
pub const CONTINUOUS_LOOP_TOLERANCE: f64 = 0.10;
/// Relative deviation allowed on discrete pass decrements.
pub const DISCRETE_PASS_TOLERANCE: f64 = 0.15;

/// Per-loop decrements of a scaled speed and their check against a target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopReport {
    pub decrements: Vec<f64>,
    /// Nominal decrement per loop.
    pub target: f64,
    pub tolerance: f64,
    /// `None` when no loop was detected.
    pub passed: Option<bool>,
    pub note: Option<String>,
}

impl LoopReport {
    fn empty(target: f64, tolerance: f64, what: &str) -> Self {
        Self {
            decrements: Vec::new(),
            target,
            tolerance,
            passed: None,
            note: Some(format!("no complete {what} detected")),
        }
    }
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if a < b {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "need a < b, got [{a}, {b}]"
        )))
    }
}

/// A loop enters `[a, b]` through one endpoint, leaves through the other, re-enters
/// there and leaves through the starting endpoint. The decrement is the drop of
/// `|t ẋ|` from the first to the last of these crossings; each must be at least
/// `2(α − 1)(b − a)` minus 10%.
pub fn loop_decrement(events: &[CrossingEvent], alpha: f64, a: f64, b: f64) -> Result<LoopReport> {
    check_interval(a, b)?;
    let target = 2.0 * (alpha - 1.0) * (b - a);
    let decrements: Vec<f64> = events
        .windows(4)
        .filter(|w| {
            w[0].direction == Direction::Enter
                && w[1].direction == Direction::Leave
                && w[2].direction == Direction::Enter
                && w[3].direction == Direction::Leave
                && w[1].boundary != w[0].boundary
                && w[2].boundary == w[1].boundary
                && w[3].boundary == w[0].boundary
        })
        .map(|w| w[0].scaled_speed - w[3].scaled_speed)
        .collect();
    if decrements.is_empty() {
        return Ok(LoopReport::empty(target, CONTINUOUS_LOOP_TOLERANCE, "loop"));
    }
    let floor = target * (1.0 - CONTINUOUS_LOOP_TOLERANCE);
    let passed = decrements.iter().all(|d| *d >= floor);
    Ok(LoopReport {
        decrements,
        target,
        tolerance: CONTINUOUS_LOOP_TOLERANCE,
        passed: Some(passed),
        note: None,
    })
}

/// Checks each discrete pass decrement of `|k Δx|` against `2(b − a)` within 15%.
pub fn discrete_loop_decrement(passes: &[DiscretePass], a: f64, b: f64) -> Result<LoopReport> {
    check_interval(a, b)?;
    let target = 2.0 * (b - a);
    if passes.is_empty() {
        return Ok(LoopReport::empty(target, DISCRETE_PASS_TOLERANCE, "pass"));
    }
    let decrements: Vec<f64> = passes.iter().map(|p| p.decrement).collect();
    let passed = decrements
        .iter()
        .all(|d| (d - target).abs() <= DISCRETE_PASS_TOLERANCE * target);
    Ok(LoopReport {
        decrements,
        target,
        tolerance: DISCRETE_PASS_TOLERANCE,
        passed: Some(passed),
        note: None,
    })
}

/// Initial condition found by [`search_loop_start`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSearch {
    pub x0: f64,
    pub v0: f64,
    pub events: Vec<CrossingEvent>,
    pub report: LoopReport,
}

/// Scans `x0 ∈ {b + 1, …, b + 10}` with `v0 = 0` and returns the first start
/// producing at least two loops.
pub fn search_loop_start(
    spec: &ProblemSpec,
    alpha: f64,
    a: f64,
    b: f64,
    t_end: f64,
    tol: f64,
) -> Result<Option<LoopSearch>> {
    check_interval(a, b)?;
    for offset in 1..=10 {
        let x0 = b + offset as f64;
        let cfg = IntegrationConfig::new(alpha, vec![x0], vec![0.0])
            .t_end(t_end)
            .tol(tol);
        let traj = integrate(spec, &cfg)?;
        let events = crossing_events(&traj, a, b)?;
        let report = loop_decrement(&events, alpha, a, b)?;
        if report.decrements.len() >= 2 {
            return Ok(Some(LoopSearch {
                x0,
                v0: 0.0,
                events,
                report,
            }));
        }
    }
    Ok(None)
}
