//! `bwbroker`: run scenarios, sweep batches, check event logs and publish
//! transparency reports.
//!
//! Exit codes: 0 success, 2 usage, 3 invalid scenario or events file,
//! 4 simulation failure, 5 file system error, 6 conformance failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use bwbroker_core::BamModel;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bwbroker", version, about = "Bandwidth broker simulator for LSP admission")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario for each model and seed and write all artifacts.
    Run(RunArgs),
    /// Simulate several scenarios; writes summaries and tables only.
    Sweep(SweepArgs),
    /// Replay an events file and check that every block and reclaim was forced.
    Check(CheckArgs),
    /// Print the scenario's traffic-management disclosure.
    Transparency(TransparencyArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Models to run (comma separated); defaults to the scenario's own.
    #[arg(long, value_delimiter = ',')]
    model: Vec<BamModel>,
    /// Seeds as a list and/or ranges, e.g. `1-10` or `1,4,9`; defaults to the scenario's.
    #[arg(long, value_parser = commands::parse_seeds)]
    seeds: Option<commands::Seeds>,
    /// Output directory; each scenario gets its own subdirectory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Exit with status 6 if any conformance check fails.
    #[arg(long)]
    strict: bool,
    /// Format of comparison tables.
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Non-discrimination probes per model.
    #[arg(long, default_value_t = 10_000)]
    probes: usize,
    /// Equivalence band for the proportionality check, in percentage points.
    #[arg(long, default_value_t = 3.0)]
    band: f64,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file, or the name of a bundled one (`scenario1.toml`).
    #[arg(long)]
    scenario: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Width of time-series buckets.
    #[arg(long, default_value_t = 60)]
    bucket_seconds: u64,
    /// Write the transparency report and stop.
    #[arg(long)]
    transparency_only: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario files; repeat the flag for several.
    #[arg(long, required = true)]
    scenario: Vec<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CheckArgs {
    /// Scenario the events file was produced from.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    events: PathBuf,
    /// Also write the verdict as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransparencyArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        self != Format::Json
    }

    fn json(self) -> bool {
        self != Format::Csv
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => commands::run(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Check(a) => commands::check(&a),
        Command::Transparency(a) => commands::transparency(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bwbroker: {e}");
            ExitCode::from(e.code())
        }
    }
}
