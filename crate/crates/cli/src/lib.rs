//! Experiment runner: config loading, dispatch to the optimizer and the
//! numerical checks, and trace, metadata and plot output.

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod run;
pub mod setup;
pub mod sweep;
pub mod verify;

pub use config::{load_config, parse_config, ExperimentConfig, Mode};
pub use error::CliError;
pub use run::{run_experiment, OutputOptions};
pub use sweep::run_sweep;
pub use verify::run_verify;
