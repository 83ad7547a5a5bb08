use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use avd_core::problems::catalog;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Continuous,
    Discrete,
    Both,
}

impl Mode {
    pub fn continuous(self) -> bool {
        matches!(self, Mode::Continuous | Mode::Both)
    }

    pub fn discrete(self) -> bool {
        matches!(self, Mode::Discrete | Mode::Both)
    }
}

/// One experiment: a catalog problem swept over `alpha_grid`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: String,
    pub mode: Mode,
    pub alpha_grid: Vec<f64>,
    pub t_end: f64,
    pub iterations: usize,
    pub tol: f64,
    /// Step size; `1/L` when absent.
    pub step: Option<f64>,
    /// `zero` or `power:<c>:<q>`, used as `g(t)` and as `g_k`.
    pub forcing: String,
    /// Starting point; the catalog default when absent.
    pub x0: Option<Vec<f64>>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: "quadratic".into(),
            mode: Mode::Continuous,
            alpha_grid: vec![3.0],
            t_end: 1e3,
            iterations: 100_000,
            tol: 1e-9,
            step: None,
            forcing: "zero".into(),
            x0: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
            workers: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid experiment config")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Step size actually used by discrete runs.
    pub fn resolved_step(&self) -> Result<f64> {
        let spec = catalog::problem(&self.problem)?;
        Ok(self.step.unwrap_or(1.0 / spec.lipschitz()))
    }

    pub fn validate(&self) -> Result<()> {
        let entry = catalog::lookup(&self.problem)?;
        if self.alpha_grid.is_empty() {
            bail!("alpha_grid is empty");
        }
        if let Some(a) = self
            .alpha_grid
            .iter()
            .find(|a| !(**a > 0.0 && a.is_finite()))
        {
            bail!("alpha values must be finite and > 0, got {a}");
        }
        if self.mode.continuous() && !(self.t_end > 1.0 && self.t_end.is_finite()) {
            bail!("t_end must be finite and > t0 = 1, got {}", self.t_end);
        }
        if self.mode.continuous() && !(self.tol > 0.0 && self.tol < 1.0) {
            bail!("tol must lie in (0, 1), got {}", self.tol);
        }
        if self.mode.discrete() && self.iterations < 100 {
            bail!("iterations must be at least 100, got {}", self.iterations);
        }
        if self.mode.discrete() {
            let s = self.resolved_step()?;
            let l = entry.spec.lipschitz();
            if !(s > 0.0) || s * l > 1.0 + 1e-12 {
                bail!("step s = {s} violates 0 < s ≤ 1/L = {}", 1.0 / l);
            }
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != entry.spec.dim() {
                bail!(
                    "x0 has {} entries, problem '{}' has dimension {}",
                    x0.len(),
                    self.problem,
                    entry.spec.dim()
                );
            }
        }
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        self.forcing.parse::<avd_core::Forcing>()?;
        Ok(())
    }
}
