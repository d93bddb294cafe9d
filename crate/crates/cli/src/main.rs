use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use output::Outputs;

/// Light shifts, trap potentials and Stark-corrected atom counting for
/// optical dipole traps.
#[derive(Parser, Debug)]
#[command(name = "odtstark", version)]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Reserved. Every computation is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override a config value, e.g. `--set beam.power_W=24.9`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Light-shift profiles of catalog states along an axis.
    Shift,
    /// Ground-state trap potential on the x-z plane, in mK.
    Potential,
    /// Effective probe cross-section along an axis.
    SigmaEff,
    /// Synthetic OD image of the configured cloud.
    SynthOd,
    /// Naive and Stark-corrected atom numbers from an OD image.
    EstimateN {
        /// Image CSV; its `.meta` sidecar must sit next to it.
        image: PathBuf,
    },
    /// Peak OD and both atom-number estimates versus trap power.
    PowerScan,
    /// Equipotential surface at k_B T_MOT, optionally swept over focal offset.
    EquipotentialArea,
}

fn run(cli: Cli) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .context("starting thread pool")?;
    let cfg = config::load(cli.config.as_deref(), &cli.overrides)?;
    let mut out = Outputs::new(&cli.out);
    match &cli.command {
        Command::Shift => commands::shift(&cfg, &mut out)?,
        Command::Potential => commands::potential(&cfg, &mut out)?,
        Command::SigmaEff => commands::sigma_eff(&cfg, &mut out)?,
        Command::SynthOd => commands::synth(&cfg, &mut out)?,
        Command::EstimateN { image } => commands::estimate(&cfg, image, &mut out)?,
        Command::PowerScan => commands::scan(&cfg, &mut out)?,
        Command::EquipotentialArea => commands::equipotential(&cfg, &mut out)?,
    }
    for path in out.commit()? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
