use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Enter,
    Leave,
}

/// Crossing of an endpoint of `[a, b]` by a one-dimensional trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub time: f64,
    pub boundary: Boundary,
    pub direction: Direction,
    /// `|t · ẋ(t)|` at the crossing.
    pub scaled_speed: f64,
}

const TIME_TOL: f64 = 1e-10;
const PROBES_PER_STEP: usize = 8;

/// Locates crossings of `x = a` and `x = b` by bisection on the dense output.
pub fn crossing_events(traj: &Trajectory, a: f64, b: f64) -> Result<Vec<CrossingEvent>> {
    if traj.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: traj.dim(),
        });
    }
    if !(a < b) {
        return Err(Error::InvalidParameter(format!(
            "need a < b, got [{a}, {b}]"
        )));
    }
    let probes: Vec<f64> = match traj.dense() {
        Some(d) => {
            let mut p = Vec::with_capacity(d.len() * PROBES_PER_STEP + 1);
            for j in 0..d.len() {
                let (s, h, _) = d.segment(j);
                p.extend((0..PROBES_PER_STEP).map(|i| s + h * i as f64 / PROBES_PER_STEP as f64));
            }
            p.push(traj.t_end());
            p
        }
        None => traj.times().to_vec(),
    };
    let x_at = |t: f64| -> f64 { traj.state_at(t).map(|s| s.0[0]).unwrap_or(f64::NAN) };

    let mut events = Vec::new();
    let mut prev_t = probes[0];
    let mut prev_x = x_at(prev_t);
    for &t in &probes[1..] {
        if t <= prev_t {
            continue;
        }
        let x = x_at(t);
        for (level, boundary) in [(a, Boundary::A), (b, Boundary::B)] {
            let above0 = prev_x > level;
            if above0 == (x > level) {
                continue;
            }
            let (mut lo, mut hi) = (prev_t, t);
            while hi - lo > TIME_TOL * hi.max(1.0) {
                let mid = 0.5 * (lo + hi);
                if (x_at(mid) > level) == above0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let time = 0.5 * (lo + hi);
            let v = traj.state_at(time)?.1[0];
            let inward = match boundary {
                Boundary::A => !above0,
                Boundary::B => above0,
            };
            events.push(CrossingEvent {
                time,
                boundary,
                direction: if inward {
                    Direction::Enter
                } else {
                    Direction::Leave
                },
                scaled_speed: (time * v).abs(),
            });
        }
        prev_t = t;
        prev_x = x;
    }
    events.sort_by(|p, q| p.time.total_cmp(&q.time));
    Ok(events)
}
