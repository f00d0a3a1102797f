//! CLI-facing machinery: TOML run configs, manifests, run directories with
//! trajectory/report/plot-data files, parameter sweeps, and check suites.
//! Outputs are plain CSV and JSON; plotting stays out of core.

pub mod checks;
pub mod config;
pub mod manifest;
pub mod runner;
pub mod sweep;

pub use checks::{run_suite, suite_names, CheckResult};
pub use config::{InitialData, RunConfig, SweepSpec};
pub use manifest::{OutcomeSummary, RunManifest};
pub use runner::{run_config, write_run_dir, RunArtifacts, RunReport};
pub use sweep::{run_sweep, SweepRow};
