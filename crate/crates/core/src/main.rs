use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use breather::cli::{run_command, CliError, Command, RunContext};

#[derive(Parser)]
#[command(name = "breather", version, about = "Spectral statistics of random breather operators")]
struct Args {
    #[command(subcommand)]
    command: Sub,

    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the master seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Smallest eigenvalues and residuals per sample.
    Spectrum,
    /// Monte Carlo integrated density of states.
    Ids,
    /// Thirring lower-bound chain per sample.
    ThirringVerify,
    /// P(S_L <= E[S_1]/2) per box size and the fitted rate.
    Concentration,
    /// Lifshitz tail fit from an IDS file or a scheduled simulation.
    Tailfit,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Spectrum => Command::Spectrum,
            Sub::Ids => Command::Ids,
            Sub::ThirringVerify => Command::ThirringVerify,
            Sub::Concentration => Command::Concentration,
            Sub::Tailfit => Command::Tailfit,
        }
    }
}

fn run(args: Args) -> Result<()> {
    let config = args.config.ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let ctx = RunContext::from_file(&config, args.seed, args.out)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = args.threads {
        if k == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()).into());
        }
        pool = pool.num_threads(k);
    }
    let pool = pool.build().context("building the thread pool")?;
    let written = pool.install(|| run_command(args.command.into(), &ctx))?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code)
        }
    }
}
