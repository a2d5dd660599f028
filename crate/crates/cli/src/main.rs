//! `rrge`: rank revealing Gaussian elimination from the command line.
//!
//! Exit codes: 0 success, 1 usage/parse/input error, 2 numerical breakdown,
//! 3 iteration cap exceeded, 4 failed certificate or battery.

mod commands;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::source::{Source, GRAMMAR};

#[derive(Parser, Debug)]
#[command(name = "rrge", version, about = "Rank revealing Gaussian elimination by local maximum volume", after_help = GRAMMAR)]
struct Cli {
    /// Worker threads for batch work (default: one per core).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Numerical rank, selected block and certificates for one matrix.
    #[command(after_help = GRAMMAR)]
    Rank(RankArgs),
    /// Compare against the SVD on a set of matrices and write the CSV report.
    #[command(after_help = GRAMMAR)]
    Compare(CompareArgs),
    /// Run the verification batteries.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct EngineArgs {
    /// Volume growth threshold, at least 1.
    #[arg(long, default_value_t = 2.0)]
    rho: f64,
    /// Regularization; defaults to max(m, n) * eps * max|a_ij|.
    #[arg(long)]
    beta: Option<f64>,
    /// Fill the elapsed_ms report column (makes output run dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct RankArgs {
    source: Source,
    #[command(flatten)]
    engine: EngineArgs,
    /// Append a report row to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Test the block for local maximum volume at --rho.
    #[arg(long)]
    check_local: bool,
    /// Test the block for normal maximum volume at --rho.
    #[arg(long)]
    check_normal: bool,
    /// Check the leading k x k block instead of the selected one.
    #[arg(long, value_name = "K")]
    leading: Option<usize>,
    /// Print the selected row and column indices (1-based).
    #[arg(long)]
    show_sets: bool,
}

#[derive(Args, Debug)]
struct CompareArgs {
    sources: Vec<Source>,
    #[command(flatten)]
    engine: EngineArgs,
    /// Write the report here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Battery {
    Lemmas,
    Bounds,
    Examples,
    All,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Battery::All)]
    suite: Battery,
    /// Trials per battery (default 1000 for lemmas, 200 for bounds).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 2.0)]
    rho: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };

    #[cfg(feature = "parallel")]
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }

    let outcome = match cli.command {
        Command::Rank(args) => commands::rank(args),
        Command::Compare(args) => commands::compare(args),
        Command::Verify(args) => commands::verify(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
