use std::path::PathBuf;
use std::process::ExitCode;

use bcstreams::{Algorithm, CorpusFormat};
use clap::{Args, Parser, Subcommand};

mod commands;

use commands::CliError;

/// Temporal stream detection on bibliographic-coupling networks.
#[derive(Debug, Parser)]
#[command(name = "bcstreams", version)]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect streams in a corpus.
    Detect(DetectArgs),
    /// Compare two stream partitions (stream files, ground truth or reference lists).
    Compare(CompareArgs),
    /// Generate a planted corpus from a scenario file.
    Synth(SynthArgs),
    /// Re-run a command from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Corpus file.
    pub corpus: PathBuf,
    #[arg(long, default_value = "bclc")]
    pub algorithm: Algorithm,
    /// Window length in years.
    #[arg(long, default_value_t = 5)]
    pub window: u32,
    /// Louvain runs per graph.
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Minimum normalized inter-cluster similarity for a match candidate.
    #[arg(long, default_value_t = 1e-6)]
    pub theta: f64,
    #[arg(long, default_value_t = 2)]
    pub min_shared_refs: usize,
    /// Leave streams smaller than this out of the stream file (display only).
    #[arg(long)]
    pub min_stream_size: Option<usize>,
    #[arg(long, default_value = "jsonl")]
    pub format: CorpusFormat,
    /// Also write the chosen partitions to partitions.json.
    #[arg(long)]
    pub partitions: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub x: PathBuf,
    pub y: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scenario file (JSON).
    pub scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "jsonl")]
    pub format: CorpusFormat,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Detect(a) => commands::detect(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Rerun(a) => commands::rerun(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}
