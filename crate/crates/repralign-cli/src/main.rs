//! `repralign` command-line interface.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 runtime
//! failure (degenerate data discovered mid-computation). Errors go to
//! stderr as `error[<code>]: <message>`.

mod commands;
mod config;
mod svg;

use clap::{Parser, Subcommand};

use commands::CmdError;
use config::CliArgs;
use repralign::Error;

#[derive(Parser)]
#[command(
    name = "repralign",
    version,
    about = "Task hierarchical alignment scoring for vector representations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Task hierarchical alignment score over seeded subsamples
    Thas(CliArgs),
    /// Davies-Bouldin curve and its ADBI aggregate
    Adbi(CliArgs),
    /// Few-shot learning curve and its ALC aggregate
    Alc(CliArgs),
    /// Pearson/Spearman correlation of paired observations
    Correlate(CliArgs),
    /// Bag-of-words featurization of a JSONL corpus
    Featurize(CliArgs),
    /// Representation x dataset report matrices
    Report(CliArgs),
    /// Ward clustering only; caches the dendrogram artifact
    Cluster(CliArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Thas(_) => "thas",
            Command::Adbi(_) => "adbi",
            Command::Alc(_) => "alc",
            Command::Correlate(_) => "correlate",
            Command::Featurize(_) => "featurize",
            Command::Report(_) => "report",
            Command::Cluster(_) => "cluster",
        }
    }

    fn args(&self) -> &CliArgs {
        match self {
            Command::Thas(a)
            | Command::Adbi(a)
            | Command::Alc(a)
            | Command::Correlate(a)
            | Command::Featurize(a)
            | Command::Report(a)
            | Command::Cluster(a) => a,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(&cli.command));
}

fn run(command: &Command) -> i32 {
    let cfg = match config::resolve(command.name(), command.args()) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error[config]: {msg}");
            return 2;
        }
    };
    if cfg.workers > 0 {
        // ignore failure: the global pool can only be set once (tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global();
    }
    if let Err(e) = std::fs::create_dir_all(&cfg.out_dir) {
        eprintln!("error[io]: cannot create output directory {}: {e}", cfg.out_dir);
        return 2;
    }
    let result = match command {
        Command::Thas(_) => commands::cmd_thas(&cfg),
        Command::Adbi(_) => commands::cmd_adbi(&cfg),
        Command::Alc(_) => commands::cmd_alc(&cfg),
        Command::Correlate(_) => commands::cmd_correlate(&cfg),
        Command::Featurize(_) => commands::cmd_featurize(&cfg),
        Command::Report(_) => commands::cmd_report(&cfg),
        Command::Cluster(_) => commands::cmd_cluster(&cfg),
    };
    match result {
        Ok(()) => 0,
        Err(CmdError::Usage(msg)) => {
            eprintln!("error[usage]: {msg}");
            2
        }
        Err(CmdError::Lib(e)) => {
            eprintln!("error[{}]: {e}", error_code(&e));
            exit_code(&e)
        }
    }
}

/// Stable machine-readable code per error variant.
fn error_code(e: &Error) -> &'static str {
    match e {
        Error::NonFinite { .. } => "non-finite",
        Error::LabelOutOfRange { .. } => "label-out-of-range",
        Error::DegenerateLabels(_) => "degenerate-labels",
        Error::ShapeMismatch(_) => "shape-mismatch",
        Error::SizeOutOfRange { .. } => "size-out-of-range",
        Error::DimensionMismatch(..) => "dimension-mismatch",
        Error::MismatchedDendrogram(_) => "mismatched-dendrogram",
        Error::MismatchedPartition(_) => "mismatched-partition",
        Error::KOutOfRange { .. } => "k-out-of-range",
        Error::KTooSmall(_) => "k-too-small",
        Error::TooLargeForOracle { .. } => "too-large-for-oracle",
        Error::SingleClass => "single-class",
        Error::FoldTooSmall { .. } => "fold-too-small",
        Error::DegenerateDraw { .. } => "degenerate-draw",
        Error::EmptyRuns => "empty-runs",
        Error::TooFewPairs(_) => "too-few-pairs",
        Error::ZeroVariance(_) => "zero-variance",
        Error::DuplicateCell { .. } => "duplicate-cell",
        Error::EmptyVocabulary { .. } => "empty-vocabulary",
        Error::MissingField { .. } => "missing-field",
        Error::BadJson { .. } => "bad-json",
        Error::EmptyFile(_) => "empty-file",
        Error::RowCountMismatch { .. } => "row-count-mismatch",
        Error::FormatError { .. } => "format-error",
        Error::VersionMismatch { .. } => "version-mismatch",
        Error::Io(_) => "io",
    }
}

/// Input and validation problems exit 2; failures that surface only once
/// the computation is underway exit 3.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SingleClass
        | Error::FoldTooSmall { .. }
        | Error::DegenerateDraw { .. }
        | Error::EmptyRuns
        | Error::KTooSmall(_)
        | Error::TooLargeForOracle { .. } => 3,
        _ => 2,
    }
}
