//! `gridcascade` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 input/configuration error,
//! 3 solver or simulation failure.

mod artifacts;
mod commands;
mod config;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridcascade_core::CoreError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gridcascade",
    about = "Cascading-failure simulation and worst-case contingency identification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for output artifacts.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Override TCSC deployment: on = every branch, off = none.
    #[arg(long, value_enum)]
    facts: Option<FactsFlag>,
    /// Override the relay preset time and cascade step duration, seconds.
    #[arg(long = "relay-T")]
    relay_t: Option<f64>,
}

#[derive(Copy, Clone, ValueEnum)]
enum FactsFlag {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Run one cascade and write timeline, islands and summary artifacts.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Disturbance magnitude; overrides [disturbance].value.
        #[arg(long)]
        disturbance: Option<f64>,
    },
    /// Search the disturbance box for the worst-case contingency.
    Identify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate the cascade cost over a disturbance grid.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of grid points; overrides [sweep].points.
        #[arg(long)]
        points: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not usage errors
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Simulate { common, disturbance } => {
            run_scenario(common, |scenario, out_dir| {
                commands::cmd_simulate(scenario, *disturbance, out_dir)
            })
        }
        Command::Identify { common } => {
            run_scenario(common, |scenario, out_dir| commands::cmd_identify(scenario, out_dir))
        }
        Command::Sweep { common, points } => run_scenario(common, |scenario, out_dir| {
            commands::cmd_sweep(scenario, *points, out_dir)
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

fn run_scenario<F>(common: &CommonArgs, run: F) -> anyhow::Result<()>
where
    F: FnOnce(&config::Scenario, &std::path::Path) -> anyhow::Result<()>,
{
    let raw = config::load_config(&common.config)?;
    let config_dir = common
        .config
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let facts = common.facts.map(|f| matches!(f, FactsFlag::On));
    let scenario = raw.resolve(&config_dir, facts, common.relay_t)?;
    run(&scenario, &common.out_dir)
}

/// Maps failures to exit codes: solver/simulation breakdowns are 3,
/// anything else (config, case files, validation) is an input error 2.
fn classify(error: &anyhow::Error) -> u8 {
    for cause in error.chain() {
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::SingularIsland { .. }
                | CoreError::CascadeFlow { .. }
                | CoreError::NonFinite(_)
                | CoreError::GradientProbe { .. }
                | CoreError::NoCandidate => 3,
                _ => 2,
            };
        }
    }
    2
}
