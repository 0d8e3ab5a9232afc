use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shockstab_cli::{run_command, CliError, Command, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(name = "shockstab", version, about = "Two-shock stability experiments for 1D barotropic Navier-Stokes")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON config file.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset instead of a config file.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 gives bit-for-bit reproducible sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Viscous shock profiles and tail-rate fits.
    Profile,
    /// Plain evolution of the perturbed composite wave.
    Simulate,
    /// Shift-coupled run with the entropy budget ledger.
    Contract,
    /// Fan distance along a decreasing viscosity list.
    Limit,
    /// Violation map of the weighted Poincaré-type inequality.
    Poincare,
    /// All invariant suites, with a JSON verdict.
    Check,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Profile => Command::Profile,
            Cmd::Simulate => Command::Simulate,
            Cmd::Contract => Command::Contract,
            Cmd::Limit => Command::Limit,
            Cmd::Poincare => Command::Poincare,
            Cmd::Check => Command::Check,
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        (None, Some(name)) => ExperimentConfig::preset(name).ok_or_else(|| {
            CliError::Validation(format!(
                "unknown preset {name}; known: {}",
                ExperimentConfig::preset_names().join(", ")
            ))
        })?,
        (None, None) => return Err(CliError::Validation("pass --config <path> or --preset <name>".into())),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let cfg = load(cli)?;
    let summary = run_command(cli.command.into(), &cfg, &cli.out)?;
    println!("{}", serde_json::to_string_pretty(&summary).map_err(CliError::from)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
