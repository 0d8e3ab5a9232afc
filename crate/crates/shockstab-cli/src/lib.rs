//! Experiment drivers for the two-shock stability laboratory: configuration,
//! validated runs and atomic CSV/JSON output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run_command, Command, RunSummary};
pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
