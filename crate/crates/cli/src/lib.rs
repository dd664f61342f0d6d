//! Command implementations behind the `wildvis` binary. Each `cmd_*` returns
//! a serializable report; `main` prints it as text or, with `--json`, as one
//! JSON object.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use wildvis_core::bench::{run_bench, BenchReport};
use wildvis_core::ingest::{ingest_lines, read_corpus, write_corpus, IngestStats};
use wildvis_core::projection::pipeline::{train_language, LayoutArtifact, TrainConfig, TrainReport};
use wildvis_core::projection::{decode_model, encode_model, model_version, LayoutParams, ProjectorParams};
use wildvis_core::record::ConversationRecord;
use wildvis_core::search::{encode_index, read_index_file, write_index_file, CorpusIndex, DEFAULT_THRESHOLD};
use wildvis_core::synth::{generate, plant_user_scenario, SynthConfig, Topic};
use wildvis_core::{EmbedderConfig, FieldMapping};
use wildvis_server::{model_paths, ApiConfig, AppState};

#[derive(Debug, Parser)]
#[command(name = "wildvis", version, about = "Explore conversation logs: search, embed, project, serve")]
pub struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize raw line-delimited JSON into the canonical corpus format.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Built-in adapter name (canonical, wildchat-like, lmsys-like) or a JSON mapping file.
        #[arg(long, default_value = "canonical")]
        adapter: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write a synthetic corpus.
    Generate(GenerateArgs),
    /// Build a WVIX index from a canonical corpus.
    BuildIndex {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit the layout and projector for one language.
    Train(TrainArgs),
    /// Precompute the compressed coordinate bundle for a trained language.
    Bundle {
        /// Index file.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        language: String,
        /// Defaults to `<models>/<language>.wvb1.gz`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Time indexed search against a full linear scan.
    Bench {
        /// Index file.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        queries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub docs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated topics (coding,email,story,math); default all.
    #[arg(long, value_delimiter = ',')]
    pub topics: Vec<String>,
    /// Also plant one user whose conversations include this phrase once.
    #[arg(long)]
    pub plant: Option<String>,
    #[arg(long, default_value_t = 15)]
    pub plant_count: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Canonical corpus file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub language: String,
    /// Directory receiving `<language>.wvpm` and `<language>.layout.json`.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1_500)]
    pub per_dataset: usize,
    #[arg(long, default_value_t = 256)]
    pub dimension: usize,
    #[arg(long)]
    pub layout_epochs: Option<usize>,
    #[arg(long)]
    pub projector_epochs: Option<usize>,
    /// k for the k-means labels the silhouette is scored against.
    #[arg(long, default_value_t = 4)]
    pub clusters: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Index file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub models: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: u32,
    /// Coordinate cache log; in-memory when omitted.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub cors_origin: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerateReport {
    pub docs: usize,
    pub planted_hashed_ip: Option<String>,
    pub planted_conversation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexStats {
    pub docs: usize,
    pub terms: usize,
    pub bytes: usize,
    pub skipped: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub model_path: PathBuf,
    pub layout_path: PathBuf,
    pub model_version: String,
    #[serde(flatten)]
    pub report: TrainReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleStats {
    pub path: PathBuf,
    pub points: usize,
    pub bytes: usize,
}

fn adapter_for(name: &str) -> Result<FieldMapping> {
    if let Ok(m) = FieldMapping::builtin(name) {
        return Ok(m);
    }
    let path = Path::new(name);
    if path.is_file() {
        let raw = std::fs::read(path).with_context(|| format!("reading adapter {}", path.display()))?;
        return serde_json::from_slice(&raw).with_context(|| format!("parsing adapter {}", path.display()));
    }
    bail!("unknown adapter {name:?}: not a built-in name or a mapping file")
}

fn write_records(path: &Path, records: &[ConversationRecord]) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_corpus(BufWriter::new(f), records).with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_ingest(input: &Path, adapter: &str, output: &Path) -> Result<IngestStats> {
    let mapping = adapter_for(adapter)?;
    let f = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let out = ingest_lines(BufReader::new(f), &mapping)?;
    write_records(output, &out.records)?;
    Ok(out.stats)
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<GenerateReport> {
    let topics = if args.topics.is_empty() {
        Topic::ALL.iter().map(|t| (*t, 1.0)).collect()
    } else {
        args.topics
            .iter()
            .map(|s| Topic::parse(s.trim()).map(|t| (t, 1.0)).with_context(|| format!("unknown topic {s:?}")))
            .collect::<Result<Vec<_>>>()?
    };
    let mut records = generate(&SynthConfig::new(args.docs, args.seed, &topics))?;
    let planted = args
        .plant
        .as_deref()
        .map(|phrase| plant_user_scenario(&mut records, phrase, args.plant_count, args.seed));
    write_records(&args.output, &records)?;
    Ok(GenerateReport {
        docs: records.len(),
        planted_hashed_ip: planted.as_ref().map(|p| p.hashed_ip.clone()),
        planted_conversation: planted.map(|p| p.phrase_conversation),
    })
}

pub fn cmd_build_index(input: &Path, output: &Path) -> Result<IndexStats> {
    let t0 = Instant::now();
    let corpus = read_corpus(input).with_context(|| format!("reading {}", input.display()))?;
    let index = CorpusIndex::build(corpus.records)?;
    write_index_file(&index, output).with_context(|| format!("writing {}", output.display()))?;
    Ok(IndexStats {
        docs: index.len(),
        terms: index.term_count(),
        bytes: encode_index(&index).len(),
        skipped: corpus.stats.skipped,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

impl TrainArgs {
    pub fn config(&self) -> TrainConfig {
        let defaults = TrainConfig::default();
        TrainConfig {
            embedder: EmbedderConfig::local(self.dimension),
            layout: LayoutParams {
                epochs: self.layout_epochs.unwrap_or(defaults.layout.epochs),
                rng_seed: defaults.layout.rng_seed ^ self.seed,
                ..defaults.layout
            },
            projector: ProjectorParams {
                epochs: self.projector_epochs.unwrap_or(defaults.projector.epochs),
                seed: defaults.projector.seed ^ self.seed,
                ..defaults.projector
            },
            n_per_dataset: self.per_dataset,
            subset_seed: self.seed,
            silhouette_clusters: self.clusters,
        }
    }
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainSummary> {
    let corpus = read_corpus(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let trained = train_language(&corpus.records, &args.language, &args.config())?;
    std::fs::create_dir_all(&args.output)?;
    let paths = model_paths(&args.output, &trained.model.language);
    std::fs::write(&paths.model, encode_model(&trained.model))?;
    std::fs::write(&paths.layout, serde_json::to_vec(&trained.artifact)?)?;
    Ok(TrainSummary {
        model_path: paths.model,
        layout_path: paths.layout,
        model_version: format!("{:016x}", model_version(&trained.model)),
        report: trained.artifact.report,
    })
}

pub fn cmd_bundle(index_path: &Path, models: &Path, language: &str, output: Option<&Path>) -> Result<BundleStats> {
    let index = read_index_file(index_path).with_context(|| format!("reading {}", index_path.display()))?;
    let paths = model_paths(models, language);
    let raw = std::fs::read(&paths.layout).with_context(|| format!("reading {}", paths.layout.display()))?;
    let artifact: LayoutArtifact = serde_json::from_slice(&raw)?;
    // catches a layout whose model was retrained for another language
    let model = decode_model(&std::fs::read(&paths.model)?)?;
    if !model.language.eq_ignore_ascii_case(&artifact.language) {
        bail!("model language {:?} does not match layout {:?}", model.language, artifact.language);
    }
    let bytes = artifact.bundle(&index)?;
    let path = output.map_or(paths.bundle, Path::to_path_buf);
    std::fs::write(&path, &bytes)?;
    Ok(BundleStats {
        path,
        points: artifact.points.len(),
        bytes: bytes.len(),
    })
}

pub fn cmd_bench(index_path: &Path, queries: usize, seed: u64) -> Result<BenchReport> {
    let index = read_index_file(index_path).with_context(|| format!("reading {}", index_path.display()))?;
    if index.is_empty() {
        bail!("index is empty");
    }
    Ok(run_bench(&index, queries, seed))
}

pub fn serve_config(args: &ServeArgs) -> ApiConfig {
    let mut config = ApiConfig::new(SocketAddr::new(args.host, args.port), args.input.clone(), args.models.clone());
    config.cache_path = args.cache.clone();
    config.cors_origin = args.cors_origin.clone();
    config.default_threshold = args.threshold;
    config
}

pub fn cmd_serve(args: &ServeArgs) -> Result<()> {
    let config = serve_config(args);
    let addr = config.bind;
    let state = Arc::new(AppState::load(config)?);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(wildvis_server::serve(state, addr))?;
    Ok(())
}

fn emit<T: Serialize>(json: bool, report: &T, text: String) -> Result<String> {
    Ok(if json { serde_json::to_string(report)? } else { text })
}

/// Runs one command and returns what should be printed.
pub fn run(cli: &Cli) -> Result<String> {
    let json = cli.json;
    match &cli.command {
        Command::Ingest { input, adapter, output } => {
            let s = cmd_ingest(input, adapter, output)?;
            emit(json, &s, format!("parsed={} skipped={}", s.parsed, s.skipped))
        }
        Command::Generate(args) => {
            let r = cmd_generate(args)?;
            let mut text = format!("docs={}", r.docs);
            if let (Some(ip), Some(id)) = (&r.planted_hashed_ip, &r.planted_conversation) {
                text.push_str(&format!(" planted_hashed_ip={ip} planted_conversation={id}"));
            }
            emit(json, &r, text)
        }
        Command::BuildIndex { input, output } => {
            let s = cmd_build_index(input, output)?;
            emit(
                json,
                &s,
                format!("docs={} terms={} bytes={} skipped={}", s.docs, s.terms, s.bytes, s.skipped),
            )
        }
        Command::Train(args) => {
            let s = cmd_train(args)?;
            let r = &s.report;
            emit(
                json,
                &s,
                format!(
                    "language={} points={} silhouette={:.4} train_rmse={:.6} diagonal={:.4} model={}",
                    r.language,
                    r.points,
                    r.silhouette,
                    r.train_rmse,
                    r.layout_diagonal,
                    s.model_path.display()
                ),
            )
        }
        Command::Bundle {
            input,
            models,
            language,
            output,
        } => {
            let s = cmd_bundle(input, models, language, output.as_deref())?;
            emit(
                json,
                &s,
                format!("points={} bytes={} path={}", s.points, s.bytes, s.path.display()),
            )
        }
        Command::Serve(args) => {
            cmd_serve(args)?;
            Ok(String::new())
        }
        Command::Bench { input, queries, seed } => {
            let r = cmd_bench(input, *queries, *seed)?;
            emit(
                json,
                &r,
                format!(
                    "docs={} queries={} indexed={:.6}s±{:.6} naive={:.6}s±{:.6} speedup={:.1}x",
                    r.docs,
                    r.queries.len(),
                    r.indexed.mean_s,
                    r.indexed.stdev_s,
                    r.naive.mean_s,
                    r.naive.stdev_s,
                    r.speedup
                ),
            )
        }
    }
}
