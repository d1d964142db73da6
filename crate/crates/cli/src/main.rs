//! `pdiqkd`: values, simulate, bounds and attack subcommands over the simulator library.
//!
//! Exit status: 0 success, 2 usage, 3 theorem inapplicable, 4 I/O.

mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Format};
use error::CliError;

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(CliError::internal)?;
    }
    let report = match &cli.command {
        Command::Values(a) => commands::values(a)?,
        Command::Simulate(a) => commands::simulate(a, cli.seed)?,
        Command::Bounds(a) => commands::bounds(a, cli.seed)?,
        Command::Attack(a) => commands::attack(a, cli.seed)?,
    };
    let format = cli.format.unwrap_or(match cli.command {
        Command::Attack(_) => Format::Csv,
        _ => Format::Json,
    });
    output::emit(&report.render(format)?, cli.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pdiqkd: {e}");
            e.exit_code()
        }
    }
}
