//! Driver for the polybias pipeline: translate, annotate, evaluate, report.
//!
//! Every command reads one run file (see [`config`]). Exit codes: 0 success,
//! 1 usage, 2 validation, 3 transport.

pub mod commands;
pub mod config;
mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "polybias", version, about = "Multilingual stereotype-bias evaluation")]
pub struct Cli {
    /// Run file (TOML).
    #[arg(short, long, global = true, default_value = "polybias.toml")]
    pub config: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Translate the source-language splits and draw review samples.
    Translate,
    /// Serve the annotation API and web console.
    AnnotateServe,
    /// Export annotation records, exclusions, summaries and agreement.
    AnnotateExport,
    /// Score every split and write predictions, metrics and the run manifest.
    Evaluate,
    /// Render heatmaps and tables from metric files.
    Report,
    /// Check the run file and datasets without scoring.
    Validate,
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

/// Runs one parsed command.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = RunConfig::load(&cli.config)?;
    match cli.command {
        Command::Translate => print_json(&commands::translate(&config)?),
        Command::AnnotateServe => commands::annotate::serve(&config)?,
        Command::AnnotateExport => print_json(&commands::annotate::export(&config)?),
        Command::Evaluate => {
            let out = commands::evaluate(&config)?;
            println!("{}", out.metrics.display());
        }
        Command::Report => {
            for f in commands::report(&config)?.files {
                println!("{}", f.display());
            }
        }
        Command::Validate => {
            let report = commands::validate(&config)?;
            print_json(&report);
            if !report.passed {
                return Err(CliError::Validation("parallel split check failed".into()));
            }
        }
    }
    Ok(())
}
