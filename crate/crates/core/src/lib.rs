//! Inertial gradient dynamics with asymptotically vanishing damping
//! `ẍ + (α/t)ẋ + ∇Φ(x) = g(t)` and the inertial forward-backward iteration,
//! with numerical certification of their convergence rates.
//!
//! * [`problems`]: objectives, proximal maps, ground truth and the Bessel oracle.
//! * [`dynamics`]: adaptive integration, dense output and crossing events.
//! * [`diagnostics`]: continuous-time energies and integral estimates.
//! * [`ifb`]: the discrete algorithm, its per-step inequalities and energies.
//! * [`rates`]: power-law fits and rate-bound verification.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod ifb;
pub mod io;
pub mod linalg;
pub mod problems;
pub mod rates;

pub use diagnostics::{DiagnosticSeries, Family, LyapunovParams, Violation};
pub use dynamics::{Forcing, IntegrationConfig, Trajectory};
pub use error::{Error, Result};
pub use ifb::{DiscreteEnergies, IterateLog, Perturbation};

pub use problems::{ArgminSet, NonsmoothObjective, ProblemSpec, Region, SmoothObjective};
pub use rates::{RateOptions, RateReport};
