//! Experiment runner: configures problems, α grids, horizons and perturbations,
//! runs sweeps and writes CSV and JSON artifacts plus a regime table.

pub mod args;
pub mod config;
pub mod experiment;
pub mod table;

pub use config::{ExperimentConfig, Mode};
pub use experiment::{run_experiment, AlphaSummary, RunOutcome};
pub use table::report_regime_table;
