use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use pmdsim::cli_io::{load_config, run_command, Command};
use pmdsim::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    BerSweep,
    Penalty,
    Analytic,
    OrthoCheck,
    FitA,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::BerSweep => Command::BerSweep,
            Cmd::Penalty => Command::Penalty,
            Cmd::Analytic => Command::Analytic,
            Cmd::OrthoCheck => Command::OrthoCheck,
            Cmd::FitA => Command::FitA,
        }
    }
}

/// PMD penalty simulator for SC-QPSK, OFDM/QAM and FBMC/OQAM.
#[derive(Debug, Parser)]
#[command(name = "pmdsim", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let mut cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("pmdsim: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = args.workers {
        if w == 0 {
            eprintln!("pmdsim: --workers must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        pool = pool.num_threads(w);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("pmdsim: cannot start workers: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    match pool.install(|| run_command(args.command.into(), &cfg, &args.out)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config { .. }) => {
            eprintln!("pmdsim: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("pmdsim: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
