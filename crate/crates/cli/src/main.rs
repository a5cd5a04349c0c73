//! Command-line entry point. Exit codes: 0 success, 1 check failure,
//! 2 usage or input error.

mod config;
mod export;
mod precision;
mod sample;
mod selftest;
mod shapes;
mod synth;
mod train_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "msgan",
    about = "Multi-scale GAN for multi-resolution multispectral satellite imagery",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit both networks' layer shapes against the published schedules.
    Shapes {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run gradient checks, layer oracles, and the second-order penalty
    /// check in the current precision.
    Selftest {
        /// Inject a known fault into the harness (testing the tester).
        #[arg(long, hide = true)]
        inject: Option<String>,
    },
    /// Generate a synthetic tile dataset.
    Synth {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 256)]
        size: usize,
    },
    /// Train a generator/discriminator pair.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Tile directory; overrides the config's data section.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Stop after this many total steps instead of the configured epochs.
        #[arg(long)]
        steps: Option<u64>,
        /// Resume from a checkpoint (configs come from the checkpoint).
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Sample tiles from a trained generator.
    Sample {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export three bands of a tile as a binary PPM.
    Export {
        #[arg(long)]
        tile: PathBuf,
        /// Comma-separated band names (r,g,b are aliases).
        #[arg(long)]
        bands: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    let precision = precision::from_env()?;
    match cli.command {
        Command::Shapes { config } => shapes::run(&config),
        Command::Selftest { inject } => selftest::run(precision, inject.as_deref()),
        Command::Synth {
            spec,
            out,
            count,
            size,
        } => synth::run(spec.as_deref(), &out, count, size),
        Command::Train {
            config,
            data,
            out,
            steps,
            resume,
        } => train_cmd::run(
            precision,
            config.as_deref(),
            data.as_deref(),
            &out,
            steps,
            resume.as_deref(),
        ),
        Command::Sample {
            checkpoint,
            count,
            seed,
            out,
        } => sample::run(precision, &checkpoint, count, seed, &out),
        Command::Export { tile, bands, out } => export::run(&tile, &bands, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
