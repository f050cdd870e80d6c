use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mechsolve::{cmd_solve, cmd_sweep_alpha0, cmd_verify, CliError, RunOptions};

#[derive(Parser)]
#[command(
    name = "mechsolve",
    version,
    about = "Optimal truthful incentive schedules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonFlags {
    /// Output directory (default: the config's output_dir, else ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress progress messages
    #[arg(long)]
    quiet: bool,
    /// Run twice and fail unless the outputs are byte-identical
    #[arg(long)]
    seedless: bool,
}

impl CommonFlags {
    fn options(&self) -> RunOptions {
        RunOptions {
            out_dir: self.out.clone(),
            quiet: self.quiet,
            seedless: self.seedless,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the optimal schedule and write schedule, trace and snapshots
    Solve {
        config: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Certify a schedule file and write the report and utility matrix
    Verify {
        config: PathBuf,
        schedule: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Search the initial slope and write the sweep plus the best schedule
    SweepAlpha0 {
        config: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
}

fn main() -> ExitCode {
    // clap exits with 2 on bad usage, which would read as "not converged"
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(CliError::EXIT_CODE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Solve { config, flags } => cmd_solve(config, &flags.options()),
        Command::Verify {
            config,
            schedule,
            flags,
        } => cmd_verify(config, schedule, &flags.options()),
        Command::SweepAlpha0 { config, flags } => cmd_sweep_alpha0(config, &flags.options()),
    };
    match result {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CliError::EXIT_CODE)
        }
    }
}
