//! `modalign`: batch driver for module-augmented ontology alignment runs.
//!
//! Exit codes: 0 success, 1 some rules failed, 2 configuration or parse error.

mod align;
mod commands;
mod config;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modalign::scoring::ReportFormat;

use crate::config::Config;

#[derive(Debug, Parser)]
#[command(name = "modalign", version, about = "Detect complex ontology alignments with a staged LLM conversation")]
struct Cli {
    /// Flat `key = value` run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count and list the classes and properties of an ontology.
    Inspect { ontology: PathBuf },
    /// Print the Turtle fragment describing one entity.
    Snippet { ontology: PathBuf, entity: String },
    /// Rank registry modules against source entities.
    Suggest(commands::SuggestArgs),
    /// Run the prompting pipeline for every reference rule.
    Align(align::AlignArgs),
    /// Score detection files against the reference rules.
    Score(commands::ScoreArgs),
    /// Build candidate rules from detection files.
    Assemble(commands::AssembleArgs),
    /// Re-render a saved JSON report.
    Report {
        report: PathBuf,
        #[arg(long)]
        format: Option<ReportFormat>,
    },
    /// Check that stored transcripts replay unchanged.
    ReplayVerify(align::AlignArgs),
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match &cli.command {
        Command::Inspect { ontology } => commands::inspect(ontology),
        Command::Snippet { ontology, entity } => commands::snippet(ontology, entity),
        Command::Suggest(args) => commands::suggest(args, &config),
        Command::Align(args) => align::run(args, &config),
        Command::Score(args) => commands::score(args, &config),
        Command::Assemble(args) => commands::assemble_cmd(args, &config),
        Command::Report { report, format } => commands::report(report, *format, &config),
        Command::ReplayVerify(args) => commands::replay_verify(args, &config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
