//! `typlab`: command-line driver for the canonical-typicality experiments.
//!
//! Exit status: 0 on success, 2 for invalid input, 3 when a numerical routine
//! fails, 1 when artifacts cannot be written.

mod config;
mod experiments;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use typlab::parallel::{default_workers, DEFAULT_BLOCK_SIZE};
use typlab::Sampling;

use crate::config::{Cli, Command};
use crate::failure::{ErrorRecord, Failure};
use crate::output::{OutputDir, RunManifest};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err((failure, out)) => {
            eprintln!("typlab: {failure}");
            if let Some(dir) = out {
                if let Err(e) = record_error(&dir, &failure) {
                    eprintln!("typlab: could not write error record: {e}");
                }
            }
            ExitCode::from(failure.exit_code())
        }
    }
}

/// Returns the summary line, or the failure and the directory for its error record.
fn run(command: &Command) -> Result<String, (Failure, Option<PathBuf>)> {
    let config = config::resolve(command).map_err(|f| (f, command.common().out.clone()))?;
    let fail = |f: Failure| (f, Some(config.out.clone()));

    let started_at = chrono::Utc::now();
    let clock = Instant::now();
    let workers = config.workers.unwrap_or_else(default_workers);
    let sampling = Sampling::new(config.seed, workers);
    let mut out = OutputDir::create(&config.out).map_err(fail)?;
    let outcome = experiments::run(&config, sampling, &mut out).map_err(fail)?;

    let mut artifacts = out.written().to_vec();
    artifacts.push(RunManifest::FILE.to_string());
    let manifest = RunManifest {
        schema: RunManifest::SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        started_at: started_at.to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        duration_secs: clock.elapsed().as_secs_f64(),
        seed: config.seed,
        workers,
        block_size: DEFAULT_BLOCK_SIZE,
        streams: outcome.streams,
        artifacts,
        config: &config,
    };
    out.write_json(RunManifest::FILE, &manifest).map_err(fail)?;
    Ok(outcome.summary)
}

fn record_error(dir: &std::path::Path, failure: &Failure) -> Result<(), Failure> {
    OutputDir::create(dir)?.write_json("error.json", &ErrorRecord::new(failure))
}
