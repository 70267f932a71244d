use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use bcstreams::algorithms::{self, AlgorithmConfig};
use bcstreams::compare::{self, ComparisonReport};
use bcstreams::export::{self, PartitionFile, StreamsFile};
use bcstreams::synth::{GroundTruth, PlantedScenario};
use bcstreams::{BipartiteGraph, Corpus, CorpusFormat, Real, StreamPartition};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CompareArgs, DetectArgs, RerunArgs, SynthArgs};

pub const MANIFEST_FORMAT: &str = "bcstreams.manifest/1";
const COMPARISON_FORMAT: &str = "bcstreams.comparison/1";
const BIPARTITE_FORMAT: &str = "bcstreams.bipartite/1";

#[derive(Debug)]
pub enum CliError {
    /// Bad input or configuration (exit 2).
    Input(String),
    /// Anything else (exit 1).
    Internal(String),
}

impl From<bcstreams::Error> for CliError {
    fn from(e: bcstreams::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Internal(e.to_string())
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn internal(context: &str) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Internal(format!("{context}: {e}"))
}

/// A fully resolved command, enough to repeat it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Invocation {
    Detect {
        corpus: PathBuf,
        format: CorpusFormat,
        config: AlgorithmConfig,
        min_stream_size: Option<usize>,
        partitions: bool,
    },
    Compare {
        x: PathBuf,
        y: PathBuf,
    },
    Synth {
        /// Informational; the scenario below is what gets generated.
        scenario_file: PathBuf,
        scenario: PlantedScenario,
        format: CorpusFormat,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub tool: String,
    pub version: String,
    pub command: Invocation,
    pub inputs: Vec<FileDigest>,
    pub seed: Option<u64>,
    pub outputs: Vec<FileDigest>,
}

fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn absolute(path: &Path) -> CliResult<PathBuf> {
    fs::canonicalize(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn digest(path: &Path) -> CliResult<FileDigest> {
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: sha256_file(path)?,
    })
}

fn write_json_file<S: Serialize>(path: &Path, value: &S) -> CliResult {
    let f = File::create(path).map_err(internal(&path.display().to_string()))?;
    let mut w = BufWriter::new(f);
    export::write_json(&mut w, value).map_err(|e| CliError::Internal(e.to_string()))?;
    w.flush().map_err(internal(&path.display().to_string()))
}

impl Invocation {
    fn inputs(&self) -> Vec<&Path> {
        match self {
            Invocation::Detect { corpus, .. } => vec![corpus],
            Invocation::Compare { x, y } => vec![x, y],
            Invocation::Synth { .. } => vec![],
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Invocation::Detect { config, .. } => Some(config.base_seed),
            Invocation::Compare { .. } => None,
            Invocation::Synth { scenario, .. } => Some(scenario.seed),
        }
    }

    /// Runs the command into `out` and returns the written files.
    fn execute(&self, out: &Path) -> CliResult<Vec<PathBuf>> {
        fs::create_dir_all(out).map_err(internal(&out.display().to_string()))?;
        match self {
            Invocation::Detect {
                corpus,
                format,
                config,
                min_stream_size,
                partitions,
            } => run_detect(corpus, *format, config, *min_stream_size, *partitions, out),
            Invocation::Compare { x, y } => run_compare(x, y, out),
            Invocation::Synth { scenario, format, .. } => run_synth(scenario, *format, out),
        }
    }

    /// Executes and writes `manifest.json` next to the outputs.
    fn execute_with_manifest(&self, out: &Path) -> CliResult<RunManifest> {
        let inputs = self.inputs().into_iter().map(digest).collect::<CliResult<Vec<_>>>()?;
        let written = self.execute(out)?;
        let manifest = RunManifest {
            format: MANIFEST_FORMAT.to_string(),
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.clone(),
            inputs,
            seed: self.seed(),
            outputs: written.iter().map(|p| digest(p)).collect::<CliResult<Vec<_>>>()?,
        };
        write_json_file(&out.join("manifest.json"), &manifest)?;
        for p in &written {
            println!("{}", p.display());
        }
        Ok(manifest)
    }
}

fn load_corpus(path: &Path, format: CorpusFormat) -> CliResult<Corpus> {
    let f = File::open(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(Corpus::load(BufReader::new(f), format)?)
}

fn run_detect(
    corpus_path: &Path,
    format: CorpusFormat,
    config: &AlgorithmConfig,
    min_stream_size: Option<usize>,
    partitions: bool,
    out: &Path,
) -> CliResult<Vec<PathBuf>> {
    config.validate()?;
    let corpus = load_corpus(corpus_path, format)?;
    let run = algorithms::run::<Real>(&corpus, config)?;
    log::info!(
        "{}: {} streams, {} events in {} ms",
        config.algorithm,
        run.streams.stream_count(),
        run.streams.events.len(),
        run.report.wall_time_ms
    );

    let mut written = Vec::new();
    let streams = StreamsFile::new(&run.streams, &corpus, Some(config.algorithm), min_stream_size);
    let path = out.join("streams.json");
    write_json_file(&path, &streams)?;
    written.push(path);
    let path = out.join("report.json");
    write_json_file(&path, &run.report)?;
    written.push(path);
    if partitions {
        let mut files = Vec::new();
        if let Some(p) = &run.global_partition {
            files.push(PartitionFile::new("global", p));
        }
        for (k, p) in run.window_partitions.iter().enumerate() {
            if let Some(p) = p {
                files.push(PartitionFile::new(format!("window-{k}"), p));
            }
        }
        let path = out.join("partitions.json");
        write_json_file(&path, &files)?;
        written.push(path);
    }
    Ok(written)
}

/// Reads a stream file, a ground-truth file or a reference list.
pub fn load_stream_partition(path: &Path) -> CliResult<StreamPartition> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| CliError::Input(format!("{}: {e}", path.display()));
    if !text.trim_start().starts_with('{') {
        return Ok(export::read_reference_partition(text.as_bytes())?);
    }
    let value: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
    if value.get("membership").is_some() {
        let truth: GroundTruth = serde_json::from_value(value).map_err(bad)?;
        return Ok(truth.stream_partition()?);
    }
    let streams: StreamsFile = serde_json::from_value(value).map_err(bad)?;
    if streams.is_filtered() {
        return Err(CliError::Input(format!(
            "{} was written with a minimum stream size; compare needs unfiltered streams",
            path.display()
        )));
    }
    Ok(streams.stream_partition()?)
}

#[derive(Serialize)]
struct ComparisonFile<'a> {
    format: &'static str,
    x: &'a Path,
    y: &'a Path,
    #[serde(flatten)]
    report: &'a ComparisonReport,
}

#[derive(Serialize)]
struct BipartiteFile<'a> {
    format: &'static str,
    x: &'a Path,
    y: &'a Path,
    #[serde(flatten)]
    graph: &'a BipartiteGraph,
}

fn run_compare(x_path: &Path, y_path: &Path, out: &Path) -> CliResult<Vec<PathBuf>> {
    let x = load_stream_partition(x_path)?;
    let y = load_stream_partition(y_path)?;
    let (report, graph) = compare::compare::<Real>(&x, &y)?;
    if report.restriction.removed_x + report.restriction.removed_y > 0 {
        log::warn!(
            "compared on {} shared publications ({} only in X, {} only in Y)",
            report.restriction.shared,
            report.restriction.removed_x,
            report.restriction.removed_y
        );
    }
    let comparison = out.join("comparison.json");
    write_json_file(
        &comparison,
        &ComparisonFile {
            format: COMPARISON_FORMAT,
            x: x_path,
            y: y_path,
            report: &report,
        },
    )?;
    let bipartite = out.join("bipartite.json");
    write_json_file(
        &bipartite,
        &BipartiteFile {
            format: BIPARTITE_FORMAT,
            x: x_path,
            y: y_path,
            graph: &graph,
        },
    )?;
    Ok(vec![comparison, bipartite])
}

fn run_synth(scenario: &PlantedScenario, format: CorpusFormat, out: &Path) -> CliResult<Vec<PathBuf>> {
    let (corpus, truth) = scenario.generate()?;
    let corpus_path = out.join(format!("corpus.{format}"));
    let f = File::create(&corpus_path).map_err(internal(&corpus_path.display().to_string()))?;
    let mut w = BufWriter::new(f);
    corpus.write(&mut w, format).map_err(|e| CliError::Internal(e.to_string()))?;
    w.flush().map_err(internal(&corpus_path.display().to_string()))?;
    let truth_path = out.join("truth.json");
    write_json_file(&truth_path, &truth)?;
    Ok(vec![corpus_path, truth_path])
}

pub fn detect(args: &DetectArgs) -> CliResult {
    let config = AlgorithmConfig {
        algorithm: args.algorithm,
        delta_t: args.window,
        n_runs: args.runs,
        base_seed: args.seed,
        theta: args.theta,
        min_shared_refs: args.min_shared_refs,
    };
    config.validate()?;
    Invocation::Detect {
        corpus: absolute(&args.corpus)?,
        format: args.format,
        config,
        min_stream_size: args.min_stream_size,
        partitions: args.partitions,
    }
    .execute_with_manifest(&args.out)
    .map(drop)
}

pub fn compare(args: &CompareArgs) -> CliResult {
    Invocation::Compare {
        x: absolute(&args.x)?,
        y: absolute(&args.y)?,
    }
    .execute_with_manifest(&args.out)
    .map(drop)
}

pub fn synth(args: &SynthArgs) -> CliResult {
    let file = File::open(&args.scenario)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.scenario.display())))?;
    let mut scenario: PlantedScenario = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| CliError::Input(format!("{}: {e}", args.scenario.display())))?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    Invocation::Synth {
        scenario_file: absolute(&args.scenario)?,
        scenario,
        format: args.format,
    }
    .execute_with_manifest(&args.out)
    .map(drop)
}

pub fn rerun(args: &RerunArgs) -> CliResult {
    let file = File::open(&args.manifest)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.manifest.display())))?;
    let manifest: RunManifest = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| CliError::Input(format!("{}: {e}", args.manifest.display())))?;
    if manifest.format != MANIFEST_FORMAT {
        return Err(CliError::Input(format!("unsupported manifest format `{}`", manifest.format)));
    }
    for input in &manifest.inputs {
        let now = sha256_file(&input.path)?;
        if now != input.sha256 {
            return Err(CliError::Input(format!(
                "{} changed since the recorded run (sha256 {now}, recorded {})",
                input.path.display(),
                input.sha256
            )));
        }
    }
    if manifest.version != env!("CARGO_PKG_VERSION") {
        log::warn!("manifest written by version {}, running {}", manifest.version, env!("CARGO_PKG_VERSION"));
    }
    let again = manifest.command.execute_with_manifest(&args.out)?;
    for (old, new) in manifest.outputs.iter().zip(&again.outputs) {
        let name = new.path.file_name().unwrap_or_default().to_string_lossy();
        let status = if old.sha256 == new.sha256 { "identical" } else { "differs" };
        eprintln!("{name}: {status}");
    }
    Ok(())
}
