use crate::error::{Error, Result};
use crate::problems::ProblemSpec;

use super::rk;
use super::Forcing;

/// Piecewise continuous extension over the accepted steps.
#[derive(Clone, Debug)]
pub(crate) struct DenseOutput {
    pub width: usize,
    pub starts: Vec<f64>,
    pub steps: Vec<f64>,
    pub coeffs: Vec<f64>,
}

impl DenseOutput {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            starts: Vec::new(),
            steps: Vec::new(),
            coeffs: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, h: f64, coeffs: &[f64]) {
        self.starts.push(t);
        self.steps.push(h);
        self.coeffs.extend_from_slice(coeffs);
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn segment(&self, j: usize) -> (f64, f64, &[f64]) {
        let w = 5 * self.width;
        (
            self.starts[j],
            self.steps[j],
            &self.coeffs[j * w..(j + 1) * w],
        )
    }

    pub fn locate(&self, t: f64) -> usize {
        self.starts
            .partition_point(|&s| s <= t)
            .saturating_sub(1)
            .min(self.len() - 1)
    }

    pub fn eval_in(&self, j: usize, t: f64, out: &mut [f64]) {
        let (s, h, c) = self.segment(j);
        rk::dense_eval(c, self.width, ((t - s) / h).clamp(0.0, 1.0), out);
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.width];
        self.eval_in(self.locate(t), t, &mut out);
        out
    }
}

/// Sampled solution of the damped inertial system on a log-uniform grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    problem: ProblemSpec,
    alpha: f64,
    tol: f64,
    forcing: Forcing,
    dim: usize,
    times: Vec<f64>,
    positions: Vec<f64>,
    velocities: Vec<f64>,
    dense: Option<DenseOutput>,
}

impl Trajectory {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        problem: ProblemSpec,
        alpha: f64,
        tol: f64,
        forcing: Forcing,
        times: Vec<f64>,
        positions: Vec<f64>,
        velocities: Vec<f64>,
        dense: Option<DenseOutput>,
    ) -> Self {
        let dim = problem.dim();
        Self {
            problem,
            alpha,
            tol,
            forcing,
            dim,
            times,
            positions,
            velocities,
            dense,
        }
    }

    /// Builds a trajectory from stored samples, validating the grid.
    pub fn from_samples(
        problem: ProblemSpec,
        alpha: f64,
        tol: f64,
        forcing: Forcing,
        times: Vec<f64>,
        positions: Vec<Vec<f64>>,
        velocities: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let dim = problem.dim();
        if times.len() < 2 || positions.len() != times.len() || velocities.len() != times.len() {
            return Err(Error::InvalidParameter(
                "trajectory needs ≥ 2 aligned samples".into(),
            ));
        }
        if !(times[0] > 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "trajectory times must be positive and strictly increasing".into(),
            ));
        }
        if let Some(p) = positions.iter().chain(&velocities).find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        forcing.validate(dim)?;
        Ok(Self::from_parts(
            problem,
            alpha,
            tol,
            forcing,
            times,
            positions.concat(),
            velocities.concat(),
            None,
        ))
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn integrator_tolerance(&self) -> f64 {
        self.tol
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.velocities[i * self.dim..(i + 1) * self.dim]
    }

    pub fn has_dense_output(&self) -> bool {
        self.dense.is_some()
    }

    /// Number of accepted integrator steps, when dense output is retained.
    pub fn step_count(&self) -> Option<usize> {
        self.dense.as_ref().map(DenseOutput::len)
    }

    pub(crate) fn dense(&self) -> Option<&DenseOutput> {
        self.dense.as_ref()
    }

    /// `(x(t), ẋ(t))` from the dense output, or by linear interpolation of samples.
    pub fn state_at(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if !(t >= self.t0() && t <= self.t_end()) {
            return Err(Error::InvalidParameter(format!(
                "t = {t} outside [{}, {}]",
                self.t0(),
                self.t_end()
            )));
        }
        if let Some(d) = &self.dense {
            let y = d.eval(t);
            return Ok((y[..self.dim].to_vec(), y[self.dim..].to_vec()));
        }
        let j = self
            .times
            .partition_point(|&s| s <= t)
            .clamp(1, self.len() - 1);
        let w = (t - self.times[j - 1]) / (self.times[j] - self.times[j - 1]);
        let lerp = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(p, q)| (1.0 - w) * p + w * q)
                .collect()
        };
        Ok((
            lerp(self.position(j - 1), self.position(j)),
            lerp(self.velocity(j - 1), self.velocity(j)),
        ))
    }

    /// Largest step-length-scaled defect `h·‖ẏ_dense − f(t, y_dense)‖_∞ / (1 + ‖y‖_∞)`
    /// at step midpoints; comparable to the per-step local error.
    pub fn collocation_defect(&self) -> Option<f64> {
        let d = self.dense.as_ref()?;
        let n = self.dim;
        let mut y = vec![0.0; 2 * n];
        let mut dy = vec![0.0; 2 * n];
        let mut worst: f64 = 0.0;
        for j in 0..d.len() {
            let (s, h, c) = d.segment(j);
            rk::dense_eval(c, 2 * n, 0.5, &mut y);
            rk::dense_derivative(c, 2 * n, h, 0.5, &mut dy);
            let t = s + 0.5 * h;
            let grad = self.problem.gradient(&y[..n]);
            let mut g = vec![0.0; n];
            self.forcing.add_to(t, &mut g);
            let scale = 1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for i in 0..n {
                let rx = dy[i] - y[n + i];
                let rv = dy[n + i] - (-(self.alpha / t) * y[n + i] - grad[i] + g[i]);
                worst = worst.max(h * rx.abs().max(rv.abs()) / scale);
            }
        }
        Some(worst)
    }
}
