//! Experiment registry, configuration, execution and plot-data emission for critflow.

pub mod config;
pub mod error;
mod experiments;
pub mod manifest;
pub mod plot;
pub mod registry;
pub mod run;

pub use config::{ExperimentConfig, Overrides, Params, Value};
pub use error::{CliError, Result};
pub use manifest::RunManifest;
pub use plot::emit_plot_data;
pub use registry::{find, list_experiments, registry, Experiment, Outcome, MODULES};
pub use run::{outcome_csv, plan, run_experiment, run_many, select};
