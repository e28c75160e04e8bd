use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use dqa_cli::config::{ExperimentConfig, Overrides};
use dqa_cli::reproduce::Study;
use dqa_cli::{commands, exit_code, reproduce};

/// Reduced-space simulation of annealing protocols on MWIS instances.
#[derive(Debug, Parser)]
#[command(name = "dqa", version)]
struct Cli {
    /// TOML experiment file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the weighted instance as JSON.
    Instance,
    /// Lowest two levels along the schedule.
    Spectrum,
    /// One trajectory, unitary or with the configured bath.
    Evolve,
    /// Final infidelity over sizes, sweep times and protocols.
    Sweep,
    /// Grid search over the quench parameters at the configured T.
    OptimizeSqs,
    /// Catalyst strength that suppresses the secondary gap.
    OptimizeJxx,
    /// Saturation fits of a sweep CSV.
    Fit,
    /// Regenerate the data behind one figure.
    Reproduce {
        #[arg(value_enum)]
        study: Study,
        /// Smaller sizes and grids.
        #[arg(long)]
        quick: bool,
    },
    /// Print the resolved configuration as TOML.
    Config,
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cli.overrides.apply(&mut config);
    config.validate().context("invalid configuration")?;
    if let Some(workers) = config.parallel.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("starting worker pool")?;
    }
    let paths = match cli.command {
        Command::Instance => commands::instance(&config)?,
        Command::Spectrum => commands::spectrum_cmd(&config)?,
        Command::Evolve => commands::evolve(&config)?,
        Command::Sweep => commands::sweep(&config)?,
        Command::OptimizeSqs => commands::optimize_sqs(&config)?,
        Command::OptimizeJxx => commands::optimize_jxx_cmd(&config)?,
        Command::Fit => commands::fit(&config)?,
        Command::Reproduce { study, quick } => reproduce::run(&config, study, quick)?,
        Command::Config => {
            print!("{}", config.to_toml());
            Vec::new()
        }
    };
    for path in paths {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
