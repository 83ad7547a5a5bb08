use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use avd_core::diagnostics::{
    energy_e, integral_estimate, speed, value_gap, IntegralEstimate, IntegralKind, LyapunovParams,
};
use avd_core::dynamics::{integrate, Forcing, IntegrationConfig, Trajectory};
use avd_core::ifb::{
    discrete_lyapunov, run_ifb, verify_anchor_inequality, verify_energy_decay, IterateLog,
    Perturbation, RateCertificate,
};
use avd_core::io::{
    write_energies_csv, write_iterates_csv, write_json, write_series_csv, write_trajectory_csv,
};
use avd_core::problems::catalog;
use avd_core::rates::{
    perturbed_energy, strong_min_rates, verify_perturbed_rate, verify_perturbed_rate_discrete,
    verify_speed_rate, verify_value_rate, verify_value_rate_discrete, RateOptions, RateReport,
    StrongMinReport,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::table::report_regime_table;

/// File name of the per-α summary inside its directory.
pub const SUMMARY_FILE: &str = "summary.json";
/// File name of the regime table inside the output directory.
pub const TABLE_FILE: &str = "regime_table.csv";

/// Continuous-time results for one α.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousSummary {
    pub samples: usize,
    pub integrator_steps: Option<usize>,
    pub lyapunov_p: f64,
    pub lyapunov_violations: usize,
    pub value: RateReport,
    pub speed: RateReport,
    pub strong_min: Option<StrongMinReport>,
    pub values_integral: IntegralEstimate,
    pub speed_integral: IntegralEstimate,
}

/// Discrete results for one α.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSummary {
    pub step: f64,
    pub iterations: usize,
    pub energy_decay_violations: usize,
    pub anchor_violations: usize,
    pub value: RateReport,
    pub lyapunov_p: f64,
    pub k0: Option<usize>,
    pub certificate: Option<RateCertificate>,
}

/// Everything measured for one α.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSummary {
    pub problem: String,
    pub alpha: f64,
    pub forcing: String,
    pub seed: u64,
    pub continuous: Option<ContinuousSummary>,
    pub discrete: Option<DiscreteSummary>,
    pub failures: Vec<String>,
}

/// Result of [`run_experiment`].
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summaries: Vec<AlphaSummary>,
    pub failures: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

type Artifact = (PathBuf, Vec<u8>);

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> avd_core::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn alpha_dir(alpha: f64) -> PathBuf {
    PathBuf::from(format!("alpha_{alpha}"))
}

fn integral_p(alpha: f64) -> f64 {
    0.9 * (alpha / 3.0).min(1.0)
}

/// Rate checks, energies and integral estimates for one trajectory.
pub fn analyse_trajectory(
    traj: &Trajectory,
    dir: &Path,
) -> Result<(ContinuousSummary, Vec<String>, Vec<Artifact>)> {
    let alpha = traj.alpha();
    let spec = traj.problem();
    let forced = !traj.forcing().is_zero();
    let opts = RateOptions::default();
    let z = spec.require_argmin()?.project(traj.position(0));
    let params = LyapunovParams::family_a(alpha)?;
    let mut failures = Vec::new();

    let energy = if forced {
        perturbed_energy(traj, &z, &params)?
    } else {
        energy_e(traj, &z, &params)?
    };
    if !energy.is_monotone() {
        failures.push(format!(
            "α = {alpha}: Lyapunov function increases at {} samples (max {:.3e})",
            energy.monotone_violations.len(),
            energy.max_increase()
        ));
    }

    let value = if !forced {
        verify_value_rate(traj, &opts)?
    } else if traj.forcing().is_integrable_against(params.p) {
        verify_perturbed_rate(traj, params.p, &opts)?
    } else {
        let mut r = verify_value_rate(traj, &opts)?;
        r.asserted = false;
        r.notes.push(format!(
            "forcing not integrable against t^{}; reported only",
            params.p
        ));
        r
    };
    let mut speed_report = verify_speed_rate(traj, &opts)?;
    if forced {
        speed_report.asserted = false;
        speed_report.notes.push("forced run; reported only".into());
    }
    let strong_min = if spec.strong_min_modulus().is_some() && !forced {
        Some(strong_min_rates(traj, &opts)?)
    } else {
        None
    };
    let p = integral_p(alpha);
    let values_integral = integral_estimate(traj, p, IntegralKind::Values)?;
    let speed_integral = integral_estimate(traj, p, IntegralKind::Speed)?;

    failures.extend(value.failures());
    failures.extend(speed_report.failures());
    if let Some(sm) = &strong_min {
        failures.extend(sm.values.failures());
        failures.extend(sm.distance.failures());
        failures.extend(sm.speed.failures());
        if sm.inequality_violations > 0 {
            failures.push(format!(
                "α = {alpha}: {} samples violate the strong-minimum inequality",
                sm.inequality_violations
            ));
        }
    }
    if !forced && values_integral.within_bound == Some(false) {
        failures.push(format!(
            "α = {alpha}: I_p = {:.6e} exceeds its bound {:.6e}",
            values_integral.value,
            values_integral.bound.unwrap_or(f64::NAN)
        ));
    }

    let gap = value_gap(traj)?;
    let sp = speed(traj);
    let files = vec![
        (
            dir.join("trajectory.csv"),
            csv_bytes(|b| write_trajectory_csv(traj, b))?,
        ),
        (
            dir.join("value_gap.csv"),
            csv_bytes(|b| write_series_csv(&gap, b))?,
        ),
        (
            dir.join("speed.csv"),
            csv_bytes(|b| write_series_csv(&sp, b))?,
        ),
        (
            dir.join("lyapunov.csv"),
            csv_bytes(|b| write_series_csv(&energy, b))?,
        ),
    ];
    let summary = ContinuousSummary {
        samples: traj.len(),
        integrator_steps: traj.step_count(),
        lyapunov_p: params.p,
        lyapunov_violations: energy.monotone_violations.len(),
        value,
        speed: speed_report,
        strong_min,
        values_integral,
        speed_integral,
    };
    Ok((summary, failures, files))
}

fn discrete_rate_exponent(alpha: f64) -> f64 {
    if alpha <= 3.0 {
        let p = 2.0 * alpha / 3.0 - 0.1;
        if p > 0.0 {
            p
        } else {
            alpha / 3.0
        }
    } else {
        2.0
    }
}

/// Per-step inequalities, discrete energies and rate checks for one run.
pub fn analyse_iterates(
    log: &IterateLog,
    perturbation: Option<&Perturbation>,
    dir: &Path,
) -> Result<(DiscreteSummary, Vec<String>, Vec<Artifact>)> {
    let alpha = log.alpha();
    let spec = log.problem();
    let z = spec.require_argmin()?.project(log.x(0));
    let mut failures = Vec::new();
    let (decay, anchor) = if log.is_perturbed() {
        (Vec::new(), Vec::new())
    } else {
        (
            verify_energy_decay(log)?,
            verify_anchor_inequality(log, &z)?,
        )
    };
    if !decay.is_empty() {
        failures.push(format!(
            "α = {alpha}: {} energy-decay violations, first at k = {}",
            decay.len(),
            decay[0].k
        ));
    }
    if !anchor.is_empty() {
        failures.push(format!(
            "α = {alpha}: {} anchor-inequality violations, first at k = {}",
            anchor.len(),
            anchor[0].k
        ));
    }
    let p_rate = discrete_rate_exponent(alpha);
    let value = match perturbation {
        Some(g) if g.is_summable_against(p_rate) => verify_perturbed_rate_discrete(log, g, p_rate)?,
        Some(_) => {
            let mut r = verify_value_rate_discrete(log, p_rate)?;
            r.asserted = false;
            r.notes.push(format!(
                "perturbation not summable against k^{p_rate}; reported only"
            ));
            r
        }
        None => verify_value_rate_discrete(log, p_rate)?,
    };
    failures.extend(value.failures());

    let lyapunov_p = 0.9 * (alpha / 3.0).min(1.0).min((alpha + 1.0) / 4.0);
    let energies = discrete_lyapunov(log, &z, lyapunov_p)?;
    if let Some(c) = &energies.certificate {
        if !c.holds && !log.is_perturbed() {
            failures.push(format!(
                "α = {alpha}: discrete rate certificate fails from k = {} ({:.6e} > {:.6e})",
                c.k_start, c.max_scaled_gap, c.bound
            ));
        }
    }
    let files = vec![
        (
            dir.join("iterates.csv"),
            csv_bytes(|b| write_iterates_csv(log, perturbation, b))?,
        ),
        (
            dir.join("energies.csv"),
            csv_bytes(|b| write_energies_csv(&energies, b))?,
        ),
    ];
    let summary = DiscreteSummary {
        step: log.step(),
        iterations: log.iterations(),
        energy_decay_violations: decay.len(),
        anchor_violations: anchor.len(),
        value,
        lyapunov_p,
        k0: energies.k0,
        certificate: energies.certificate,
    };
    Ok((summary, failures, files))
}

fn run_alpha(cfg: &ExperimentConfig, alpha: f64) -> Result<(AlphaSummary, Vec<Artifact>)> {
    let entry = catalog::lookup(&cfg.problem)?;
    let dim = entry.spec.dim();
    let x0 = cfg.x0.clone().unwrap_or(entry.default_x0.clone());
    let forcing: Forcing = cfg.forcing.parse::<Forcing>()?.with_dim(dim);
    let dir = alpha_dir(alpha);
    let mut summary = AlphaSummary {
        problem: cfg.problem.clone(),
        alpha,
        forcing: cfg.forcing.clone(),
        seed: cfg.seed,
        continuous: None,
        discrete: None,
        failures: Vec::new(),
    };
    let mut files = Vec::new();
    if cfg.mode.continuous() {
        let ic = IntegrationConfig::new(alpha, x0.clone(), vec![0.0; dim])
            .t_end(cfg.t_end)
            .tol(cfg.tol)
            .forcing(forcing.clone());
        let traj =
            integrate(&entry.spec, &ic).with_context(|| format!("integrating α = {alpha}"))?;
        let (s, f, a) = analyse_trajectory(&traj, &dir)?;
        summary.continuous = Some(s);
        summary.failures.extend(f);
        files.extend(a);
    }
    if cfg.mode.discrete() {
        let perturbation = match forcing {
            Forcing::PowerDecay { c, q, direction } => {
                Some(Perturbation::PowerDecay { c, q, direction })
            }
            _ => None,
        };
        let s = cfg.resolved_step()?;
        let log = run_ifb(
            &entry.spec,
            alpha,
            s,
            &x0,
            cfg.iterations,
            perturbation.as_ref(),
        )
        .with_context(|| format!("iterating α = {alpha}"))?;
        let (s, f, a) = analyse_iterates(&log, perturbation.as_ref(), &dir)?;
        summary.discrete = Some(s);
        summary.failures.extend(f);
        files.extend(a);
    }
    let mut json = Vec::new();
    write_json(&summary, &mut json)?;
    files.push((dir.join(SUMMARY_FILE), json));
    Ok((summary, files))
}

/// Runs every α of the grid on up to `workers` threads, then writes all artifacts
/// from the calling thread. The outcome lists every failed check.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()?;
    let results: Vec<(AlphaSummary, Vec<Artifact>)> = pool.install(|| {
        cfg.alpha_grid
            .par_iter()
            .map(|a| run_alpha(cfg, *a))
            .collect::<Result<Vec<_>>>()
    })?;

    let out = &cfg.output_dir;
    let mut artifacts = Vec::new();
    let mut write = |rel: PathBuf, bytes: &[u8]| -> Result<()> {
        let path = out.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        artifacts.push(path);
        Ok(())
    };
    write(
        PathBuf::from("config.toml"),
        cfg.to_toml_string()?.as_bytes(),
    )?;
    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    for (summary, files) in results {
        for (rel, bytes) in files {
            write(rel, &bytes)?;
        }
        failures.extend(summary.failures.iter().cloned());
        summaries.push(summary);
    }
    write(
        PathBuf::from(TABLE_FILE),
        report_regime_table(&summaries).as_bytes(),
    )?;
    let mut fail_text = failures.join("\n");
    if !fail_text.is_empty() {
        fail_text.push('\n');
    }
    write(PathBuf::from("failures.txt"), fail_text.as_bytes())?;
    Ok(RunOutcome {
        summaries,
        failures,
        artifacts,
    })
}

/// Loads every `alpha_*/summary.json` below `dir`, ordered by α.
pub fn load_summaries(dir: &std::path::Path) -> Result<Vec<AlphaSummary>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path().join(SUMMARY_FILE);
        if path.is_file() {
            let text = std::fs::read_to_string(&path)?;
            out.push(
                serde_json::from_str::<AlphaSummary>(&text)
                    .with_context(|| format!("parsing {}", path.display()))?,
            );
        }
    }
    out.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    Ok(out)
}
