use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, Mode};
use crate::experiment::{
    analyse_iterates, analyse_trajectory, load_summaries, run_experiment, TABLE_FILE,
};
use crate::table::report_regime_table;

#[derive(Debug, Parser)]
#[command(
    name = "avd",
    version,
    about = "Certify convergence rates of inertial dynamics and their discretization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the continuous dynamics and check its rates.
    Simulate(RunArgs),
    /// Run the inertial forward-backward algorithm and check its inequalities.
    Iterate(RunArgs),
    /// Run an α grid in the configured mode.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Recompute diagnostics for a saved trajectory or iterate CSV.
    Diagnose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "diagnose-out")]
        out: PathBuf,
    },
    /// Rebuild the regime table from the summaries below a run directory.
    Report {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

/// Flags shared by the run subcommands; each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// TOML experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    /// Comma-separated damping exponents.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub alpha: Option<Vec<f64>>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// `zero` or `power:<c>:<q>`.
    #[arg(long)]
    pub forcing: Option<String>,
    /// Comma-separated starting point.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl RunArgs {
    /// Config file (or defaults) with every given flag applied on top.
    pub fn to_config(&self, mode: Option<Mode>) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.problem {
            cfg.problem = v.clone();
        }
        if let Some(v) = &self.alpha {
            cfg.alpha_grid = v.clone();
        }
        if let Some(v) = self.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = self.iters {
            cfg.iterations = v;
        }
        if let Some(v) = self.step {
            cfg.step = Some(v);
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = &self.forcing {
            cfg.forcing = v.clone();
        }
        if let Some(v) = &self.x0 {
            cfg.x0 = Some(v.clone());
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(m) = mode {
            cfg.mode = m;
        }
        Ok(cfg)
    }
}

/// Exit status for check failures.
pub const EXIT_CHECK_FAILED: i32 = 1;

fn report_failures(failures: &[String]) -> i32 {
    if failures.is_empty() {
        0
    } else {
        for f in failures {
            eprintln!("check failed: {f}");
        }
        EXIT_CHECK_FAILED
    }
}

fn run(cfg: ExperimentConfig) -> Result<i32> {
    let outcome = run_experiment(&cfg)?;
    print!("{}", report_regime_table(&outcome.summaries));
    println!(
        "wrote {} files to {}",
        outcome.artifacts.len(),
        cfg.output_dir.display()
    );
    Ok(report_failures(&outcome.failures))
}

fn diagnose(input: &Path, out: &Path) -> Result<i32> {
    let text =
        std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let first = text.lines().next().unwrap_or_default();
    let meta: serde_json::Value = serde_json::from_str(first.strip_prefix("# ").unwrap_or(""))
        .with_context(|| format!("{} has no metadata line", input.display()))?;
    let dir = PathBuf::new();
    let (summary_json, failures, files) = if meta.get("step").is_some() {
        let (header, log) = avd_core::io::read_iterates_csv_with_header(text.as_bytes())?;
        let (s, f, a) = analyse_iterates(&log, header.perturbation.as_ref(), &dir)?;
        (serde_json::to_vec_pretty(&s)?, f, a)
    } else if meta.get("tol").is_some() {
        let traj = avd_core::io::read_trajectory_csv(text.as_bytes())?;
        let (s, f, a) = analyse_trajectory(&traj, &dir)?;
        (serde_json::to_vec_pretty(&s)?, f, a)
    } else {
        bail!(
            "{} is neither a trajectory nor an iterate CSV",
            input.display()
        );
    };
    std::fs::create_dir_all(out)?;
    for (rel, bytes) in files {
        let name = rel
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_default();
        // The input itself is not rewritten.
        if name == "trajectory.csv" || name == "iterates.csv" {
            continue;
        }
        std::fs::write(out.join(name), bytes)?;
    }
    let mut summary_json = summary_json;
    summary_json.push(b'\n');
    std::fs::write(out.join("diagnostics.json"), summary_json)?;
    println!(
        "wrote diagnostics for {} to {}",
        input.display(),
        out.display()
    );
    Ok(report_failures(&failures))
}

/// Runs one command and returns the process exit status.
pub fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate(a) => run(a.to_config(Some(Mode::Continuous))?),
        Command::Iterate(a) => run(a.to_config(Some(Mode::Discrete))?),
        Command::Sweep { run: a, mode } => run(a.to_config(mode)?),
        Command::Diagnose { input, out } => diagnose(&input, &out),
        Command::Report { out } => {
            let summaries = load_summaries(&out)?;
            if summaries.is_empty() {
                bail!("no run summaries found below {}", out.display());
            }
            let table = report_regime_table(&summaries);
            std::fs::write(out.join(TABLE_FILE), &table)?;
            print!("{table}");
            let failures: Vec<String> = summaries.iter().flat_map(|s| s.failures.clone()).collect();
            Ok(report_failures(&failures))
        }
    }
}
