mod args;
mod denoise;
mod metrics;
mod output;
mod sweep;
mod synth;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Complex hyperspectral cube denoising.
#[derive(Debug, Parser)]
#[command(name = "hscube", version, about)]
struct Cli {
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true, env = "HSCUBE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic truth cube and optionally a noisy copy.
    Synth(synth::SynthArgs),
    /// Denoise a cube and write a JSON sidecar next to it.
    Denoise(denoise::DenoiseArgs),
    /// Score an estimate against a truth cube as CSV.
    Metrics(metrics::MetricsArgs),
    /// Run every combination of a TOML manifest.
    Sweep(sweep::SweepArgs),
}

/// Error caused by the invocation rather than by the computation.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<hscube::Error>() {
            return match e {
                hscube::Error::InvalidConfig(_)
                | hscube::Error::DimensionMismatch(_)
                | hscube::Error::DispersionRequired => 2,
                _ => 1,
            };
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Usage("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Synth(a) => synth::run(a),
        Command::Denoise(a) => denoise::run(a),
        Command::Metrics(a) => metrics::run(a),
        Command::Sweep(a) => sweep::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
