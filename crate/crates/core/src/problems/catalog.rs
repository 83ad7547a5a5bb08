//! Problems addressable by string id.

use super::{make_flat_bottom, make_lasso_1d, ArgminSet, ProblemSpec, Quadratic, Quartic};
use crate::error::{Error, Result};

pub const IDS: [&str; 6] = [
    "quadratic",
    "aniso-quadratic",
    "flat-bottom",
    "lasso-small",
    "quartic",
    "strong-quad",
];

/// Radius of the ball on which the quartic's Lipschitz constant is declared.
pub const QUARTIC_RADIUS: f64 = 4.0;

/// A catalog problem together with its default starting point.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub spec: ProblemSpec,
    pub default_x0: Vec<f64>,
}

pub fn lookup(id: &str) -> Result<CatalogEntry> {
    let (spec, default_x0) = match id {
        "quadratic" => (
            ProblemSpec::new("quadratic", Quadratic::isotropic(1))
                .with_min_value(0.0)
                .with_argmin(ArgminSet::Point(vec![0.0]))?
                .with_strong_min(1.0)?,
            vec![1.0],
        ),
        "aniso-quadratic" => (
            ProblemSpec::new(
                "aniso-quadratic",
                Quadratic::new(vec![1.0, 0.01], vec![0.0, 0.0])?,
            )
            .with_min_value(0.0)
            .with_argmin(ArgminSet::Point(vec![0.0, 0.0]))?
            .with_strong_min(0.01)?,
            vec![1.0, 1.0],
        ),
        "strong-quad" => (
            ProblemSpec::new(
                "strong-quad",
                Quadratic::new(vec![2.0, 0.5], vec![1.0, -1.0])?,
            )
            .with_min_value(0.0)
            .with_argmin(ArgminSet::Point(vec![1.0, -1.0]))?
            .with_strong_min(0.5)?,
            vec![3.0, 2.0],
        ),
        "quartic" => (
            ProblemSpec::new("quartic", Quartic::new(2, QUARTIC_RADIUS)?)
                .with_min_value(0.0)
                .with_argmin(ArgminSet::Point(vec![0.0, 0.0]))?,
            vec![2.0, -1.5],
        ),
        "flat-bottom" => (make_flat_bottom(0.0, 1.0)?, vec![3.0]),
        "lasso-small" => (make_lasso_1d(2.0, 1.0)?, vec![5.0]),
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown problem id '{other}'; expected one of {}",
                IDS.join(", ")
            )))
        }
    };
    Ok(CatalogEntry { spec, default_x0 })
}

pub fn problem(id: &str) -> Result<ProblemSpec> {
    lookup(id).map(|e| e.spec)
}
