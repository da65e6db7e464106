use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod converge;
mod run;
mod setup;
mod verify;

use config::Config;

/// Exit status with the error that caused it.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub const CONFIG: u8 = 1;
    pub const SOLVER: u8 = 2;
    pub const VERIFY: u8 = 3;
    pub const ORDER: u8 = 4;

    pub fn config(e: impl Into<anyhow::Error>) -> Self {
        Failure { code: Self::CONFIG, error: e.into() }
    }

    pub fn solver(e: impl Into<anyhow::Error>) -> Self {
        Failure { code: Self::SOLVER, error: e.into() }
    }
}

pub type Outcome = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "fblin", version, about = "Linearized free-boundary Euler on the unit disk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Dump W and W' every N steps (run only).
    #[arg(long, global = true, value_name = "N")]
    dump_fields: Option<usize>,
    /// Seed of the random fields.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration and write trajectory.csv and report.json.
    Run { config: PathBuf },
    /// Run the invariant battery and write verify.json.
    Verify { config: PathBuf },
    /// Grid and smoothing-length studies, written to converge.csv.
    Converge { config: PathBuf },
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("FBLIN_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("FBLIN_THREADS: expected a positive integer, got `{v}`"))?;
    if n == 0 {
        anyhow::bail!("FBLIN_THREADS: must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn dispatch(cli: &Cli) -> Outcome {
    init_threads().map_err(Failure::config)?;
    let path = match &cli.command {
        Command::Run { config } | Command::Verify { config } | Command::Converge { config } => config,
    };
    let cfg = Config::load(path).map_err(Failure::config)?;
    match &cli.command {
        Command::Run { .. } => run::cmd_run(
            &cfg,
            &run::RunOptions {
                out: &cli.out,
                dump_every: cli.dump_fields,
                seed: cli.seed,
            },
        ),
        Command::Verify { .. } => verify::cmd_verify(&cfg, &cli.out, cli.seed),
        Command::Converge { .. } => converge::cmd_converge(&cfg, &cli.out, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
