//! `cadalign` command-line tool.
//!
//! Exit codes:
//!
//! | code | error class                                                        |
//! |------|--------------------------------------------------------------------|
//! | 0    | success                                                            |
//! | 1    | internal error                                                     |
//! | 2    | usage error (bad flags)                                            |
//! | 3    | malformed input file (`parse_error`, `format_error`, `unsupported_feature`) |
//! | 4    | schema version mismatch (`version_error`)                          |
//! | 5    | filesystem error (`io_error`)                                      |
//! | 6    | invalid argument or geometry                                       |
//! | 7    | unknown model / empty retrieval pool / duplicate model             |
//! | 8    | scene placement failed                                             |
//!
//! Failures print one JSON object `{"error", "message", "exit_code"}` on
//! stderr. `CADALIGN_THREADS` overrides the worker thread count.

mod commands;
mod report;

use std::process::ExitCode;

use cadalign::Error;
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "cadalign",
    version,
    about = "CAD retrieval, alignment and evaluation on point clouds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic library, scenes, annotations and ideal detections.
    Synth(commands::SynthArgs),
    /// Embed every library model into an embedding database.
    Embed(commands::EmbedArgs),
    /// Print the k nearest models of a category for a query cloud or mesh.
    Retrieve(commands::RetrieveArgs),
    /// Retrieve and place CAD models for every detection.
    Align(commands::AlignArgs),
    /// Score predictions against ground-truth annotations.
    Evaluate(commands::EvaluateArgs),
    /// Shape accuracy as a function of retrieval rank, as CSV.
    Rankcurve(commands::RankcurveArgs),
    /// Time retrieval and evaluation.
    Bench(commands::BenchArgs),
    /// Write seeded loss fixtures (inputs, values, gradients) as JSON.
    Fixtures(commands::FixturesArgs),
}

pub(crate) fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Format(_) | Error::UnsupportedFeature(_) => 3,
        Error::Version { .. } => 4,
        Error::Io { .. } => 5,
        Error::UnknownModel(_) | Error::NoCandidates { .. } | Error::DuplicateModel(_) => 7,
        Error::PlacementFailed { .. } => 8,
        Error::MeshDegenerate
        | Error::IndexOutOfRange { .. }
        | Error::DegenerateExtent
        | Error::EmptyCloud
        | Error::InvalidInput(_)
        | Error::InvalidScale(_)
        | Error::DimensionMismatch { .. }
        | Error::InvalidTarget(_) => 6,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("CADALIGN_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidInput(format!("CADALIGN_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidInput(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Error> {
    configure_threads()?;
    match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Embed(a) => commands::embed(a),
        Command::Retrieve(a) => commands::retrieve(a),
        Command::Align(a) => commands::align(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Rankcurve(a) => commands::rankcurve(a),
        Command::Bench(a) => commands::bench(a),
        Command::Fixtures(a) => commands::fixtures(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            let msg = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
                "exit_code": code,
            });
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
