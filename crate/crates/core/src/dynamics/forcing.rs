use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// External forcing `g(t)` on the right-hand side of the dynamics.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Forcing {
    #[default]
    Zero,
    /// `c · t^{−q} · direction` with a unit `direction`.
    PowerDecay { c: f64, q: f64, direction: Vec<f64> },
    /// Piecewise-linear samples, zero outside the sampled range.
    Tabulated {
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

impl Forcing {
    /// `c · t^{−q}` along the first coordinate axis of `R^dim`.
    pub fn power_decay(c: f64, q: f64, dim: usize) -> Self {
        let mut direction = vec![0.0; dim.max(1)];
        direction[0] = 1.0;
        Forcing::PowerDecay { c, q, direction }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Forcing::Zero => true,
            Forcing::PowerDecay { c, .. } => *c == 0.0,
            Forcing::Tabulated { values, .. } => values.iter().all(|v| v.iter().all(|x| *x == 0.0)),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Forcing::Zero => Ok(()),
            Forcing::PowerDecay { c, q, direction } => {
                if !(c.is_finite() && q.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "forcing c and q must be finite".into(),
                    ));
                }
                if direction.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: direction.len(),
                    });
                }
                if (linalg::norm(direction) - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(
                        "forcing direction must be a unit vector".into(),
                    ));
                }
                Ok(())
            }
            Forcing::Tabulated { times, values } => {
                if times.len() != values.len() || times.len() < 2 {
                    return Err(Error::InvalidParameter(
                        "tabulated forcing needs ≥ 2 aligned samples".into(),
                    ));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidParameter(
                        "tabulated forcing times must increase".into(),
                    ));
                }
                if let Some(v) = values.iter().find(|v| v.len() != dim) {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: v.len(),
                    });
                }
                Ok(())
            }
        }
    }

    /// Adds `g(t)` to `out`.
    pub fn add_to(&self, t: f64, out: &mut [f64]) {
        match self {
            Forcing::Zero => {}
            Forcing::PowerDecay { c, q, direction } => {
                let mag = c * t.powf(-q);
                for (o, d) in out.iter_mut().zip(direction) {
                    *o += mag * d;
                }
            }
            Forcing::Tabulated { times, values } => {
                if t < times[0] || t > times[times.len() - 1] {
                    return;
                }
                let j = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
                let w = (t - times[j - 1]) / (times[j] - times[j - 1]);
                for (i, o) in out.iter_mut().enumerate() {
                    *o += (1.0 - w) * values[j - 1][i] + w * values[j][i];
                }
            }
        }
    }

    pub fn eval(&self, t: f64, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.add_to(t, &mut out);
        out
    }

    /// Whether `∫_{t0}^∞ t^p ‖g(t)‖ dt < ∞`, decided from the kind alone.
    pub fn is_integrable_against(&self, p: f64) -> bool {
        match self {
            Forcing::Zero | Forcing::Tabulated { .. } => true,
            Forcing::PowerDecay { c, q, .. } => *c == 0.0 || *q > p + 1.0,
        }
    }
}

impl fmt::Display for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "zero"),
            Forcing::PowerDecay { c, q, .. } => write!(f, "power:{c}:{q}"),
            Forcing::Tabulated { times, .. } => write!(f, "tabulated:{}", times.len()),
        }
    }
}

/// Parses `zero` or `power:<c>:<q>`; the direction defaults to the first axis
/// and is resized by [`Forcing::with_dim`].
impl FromStr for Forcing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["zero"] | ["none"] => Ok(Forcing::Zero),
            ["power", c, q] => {
                let c: f64 = c
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad forcing constant '{c}'")))?;
                let q: f64 = q
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad forcing exponent '{q}'")))?;
                Ok(Forcing::power_decay(c, q, 1))
            }
            _ => Err(Error::Parse(format!(
                "unrecognised forcing '{s}'; expected 'zero' or 'power:<c>:<q>'"
            ))),
        }
    }
}

impl Forcing {
    /// Resizes a parsed power-decay direction to `dim`, keeping the first axis.
    pub fn with_dim(self, dim: usize) -> Self {
        match self {
            Forcing::PowerDecay { c, q, .. } => Forcing::power_decay(c, q, dim),
            other => other,
        }
    }
}
