mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, CommandKind, RunConfig};
use error::CliError;

fn run(cli: Cli) -> Result<bool, CliError> {
    let (kind, flags) = cli.command.split();
    let cfg = RunConfig::resolve(kind, flags)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cfg.jobs {
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| CliError::Threads(e.to_string()))?;
    let outcome = pool.install(|| match kind {
        CommandKind::Verify => commands::verify(&cfg),
        CommandKind::Ness => commands::ness(&cfg),
        CommandKind::Observe => commands::observe(&cfg),
        CommandKind::Scan => commands::scan(&cfg),
        CommandKind::Partition => commands::partition(&cfg),
    })?;
    output::write(&cfg, &outcome)?;
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("lsness: one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("lsness: {e}");
            ExitCode::from(2)
        }
    }
}
