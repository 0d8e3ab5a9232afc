//! Experiment drivers. Each returns the summary it also writes to disk.

mod check;
mod contract;
mod limit;
mod poincare;
mod profile;
mod simulate;

pub use check::{cmd_check, CheckVerdict, SuiteResult};
pub use contract::{cmd_contract, run_contraction, ContractionOutcome};
pub use limit::{cmd_limit, limit_run, monotone, scaling_self_test, LimitRow, ScalingTest};
pub use poincare::cmd_poincare;
pub use profile::{cmd_profile, profile_row, ProfileRow};
pub use simulate::cmd_simulate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;

/// Machine-readable record of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunSummary {
    pub command: String,
    pub name: String,
    /// "ok" or "failed".
    pub status: String,
    pub seed: u64,
    /// Files written next to the summary.
    pub files: Vec<String>,
    pub final_fan_distance: Option<f64>,
    /// Fitted decay rates keyed by what decays.
    pub decay_rates: BTreeMap<String, f64>,
    pub max_budget_residual: Option<f64>,
    pub ledger_constant: Option<f64>,
    /// (t, X1, X2) at the report cadence.
    pub shift_trajectory: Vec<[f64; 3]>,
    /// Remaining scalar results.
    pub metrics: BTreeMap<String, f64>,
    pub messages: Vec<String>,
}

impl RunSummary {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            command: command.to_string(),
            name: cfg.name.clone(),
            status: "ok".into(),
            seed: cfg.seed,
            ..Default::default()
        }
    }

    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    /// Writes `summary.json` last, so every file it lists already exists.
    pub fn finish(mut self, out: &mut OutputDir) -> CliResult<Self> {
        self.files = out.written();
        out.write_json("summary.json", &self)?;
        Ok(self)
    }

    /// Marks the run failed, writes the summary and returns `err`.
    pub fn fail(mut self, out: &mut OutputDir, err: CliError) -> CliResult<Self> {
        self.status = "failed".into();
        self.messages.push(err.to_string());
        self.finish(out)?;
        Err(err)
    }
}

/// Subcommand names as accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Profile,
    Simulate,
    Contract,
    Limit,
    Poincare,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Simulate => "simulate",
            Command::Contract => "contract",
            Command::Limit => "limit",
            Command::Poincare => "poincare",
            Command::Check => "check",
        }
    }
}

/// Validates, then creates the output directory and runs the command.
pub fn run_command(cmd: Command, cfg: &ExperimentConfig, out_dir: &std::path::Path) -> CliResult<RunSummary> {
    cfg.validate()?;
    let mut out = OutputDir::create(out_dir)?;
    match cmd {
        Command::Profile => cmd_profile(cfg, &mut out),
        Command::Simulate => cmd_simulate(cfg, &mut out),
        Command::Contract => cmd_contract(cfg, &mut out),
        Command::Limit => cmd_limit(cfg, &mut out),
        Command::Poincare => cmd_poincare(cfg, &mut out),
        Command::Check => cmd_check(cfg, &mut out),
    }
}
