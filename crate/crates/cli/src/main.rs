mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use resrec::config::RunConfig;
use resrec::corpus::EntityKind;
use resrec::pipeline::Retriever;
use resrec::Error;

/// Baseline and dataset recommendation for research ideas.
#[derive(Parser, Debug)]
#[command(name = "resrec", version)]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory holding the store, caches, indexes and checkpoints.
    #[arg(long, global = true)]
    work_dir: Option<PathBuf>,
    /// Provider base URL, or "mock".
    #[arg(long, global = true)]
    provider: Option<String>,
    /// Bearer token for the provider.
    #[arg(long, global = true, env = "RESREC_PROVIDER_TOKEN", hide_env_values = true)]
    provider_token: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Repeat for more logging.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Baseline,
    Dataset,
    Both,
}

impl KindArg {
    pub fn kinds(self) -> Vec<EntityKind> {
        match self {
            KindArg::Baseline => vec![EntityKind::Baseline],
            KindArg::Dataset => vec![EntityKind::Dataset],
            KindArg::Both => EntityKind::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RetrieverArg {
    Dense,
    Bm25,
}

impl From<RetrieverArg> for Retriever {
    fn from(r: RetrieverArg) -> Self {
        match r {
            RetrieverArg::Dense => Retriever::Dense,
            RetrieverArg::Bm25 => Retriever::Bm25,
        }
    }
}

/// Pipeline flags shared by query and evaluate.
#[derive(Args, Debug, Default, Clone)]
pub struct PipelineFlags {
    #[arg(long, value_enum)]
    retriever: Option<RetrieverArg>,
    /// Stage-1 candidates handed to the reranker.
    #[arg(long)]
    shortlist: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Weight of the retrieval score in the deterministic rerank blend.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, overrides_with = "no_rerank")]
    rerank: bool,
    #[arg(long)]
    no_rerank: bool,
    /// Send rerank prompts to the provider.
    #[arg(long)]
    llm_rerank: bool,
    #[arg(long)]
    no_chains: bool,
    #[arg(long)]
    no_perception: bool,
    #[arg(long)]
    no_description: bool,
    /// Project embeddings through the trained adapter checkpoint.
    #[arg(long)]
    adapter: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate a corpus file and write the normalized store.
    Ingest {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Keep entities with overlapping aliases separate.
        #[arg(long)]
        no_merge: bool,
    },
    /// Summarize citation contexts into the perception cache.
    BuildPerception {
        #[arg(long)]
        radius: Option<usize>,
        /// Papers whose contexts must not be used (split file).
        #[arg(long)]
        exclude: Option<PathBuf>,
        /// Use the extractive summary instead of the provider.
        #[arg(long)]
        no_summarizer: bool,
    },
    /// Embed candidate representations into per-kind indexes.
    BuildIndex {
        #[arg(long, value_enum, default_value_t = KindArg::Both)]
        kind: KindArg,
        #[arg(long)]
        no_perception: bool,
        #[arg(long)]
        no_description: bool,
        #[arg(long)]
        adapter: bool,
    },
    /// Train the embedding adapter on (paper, gold entity) pairs.
    TrainAdapter {
        /// Papers to draw pairs from (default: all).
        #[arg(long)]
        split: Option<PathBuf>,
        /// JSON lines of {"query": ..., "target": ...} instead of the store.
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Recommend candidates for free text or a corpus paper.
    Query {
        #[arg(long, conflicts_with = "paper", required_unless_present = "paper")]
        text: Option<String>,
        #[arg(long)]
        paper: Option<String>,
        /// Entities the idea already uses, anchoring chains for free text.
        #[arg(long, value_delimiter = ',')]
        bridges: Vec<String>,
        #[arg(long, value_enum, default_value_t = KindArg::Both)]
        kind: KindArg,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[command(flatten)]
        pipeline: PipelineFlags,
    },
    /// Write (Q, R, A) reranker training triplets.
    EmitSft {
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        max_shortlist: Option<usize>,
    },
    /// Recall@k and HitRate@k over a split.
    Evaluate {
        #[arg(long)]
        split: PathBuf,
        /// Run every valid toggle combination.
        #[arg(long)]
        ablation: bool,
        #[arg(long, value_delimiter = ',')]
        recall_k: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        hitrate_k: Option<Vec<usize>>,
        /// Report directory (default from config).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineFlags,
    },
    /// Chain-pool recall and precision against gold sets.
    AnalyzeChains {
        #[arg(long)]
        split: PathBuf,
        /// Add the same-venue comparison pool.
        #[arg(long)]
        with_venue: bool,
        /// Also write every enumerated chain here.
        #[arg(long)]
        chains_out: Option<PathBuf>,
    },
    /// Write a seeded synthetic corpus.
    GenSynthetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        papers: usize,
        #[arg(long, default_value_t = 40)]
        baselines: usize,
        #[arg(long, default_value_t = 40)]
        datasets: usize,
        #[arg(long, default_value_t = 0.05)]
        density: f64,
        #[arg(long, default_value_t = 8)]
        topics: usize,
        #[arg(long, default_value_t = 0.0)]
        topic_affinity: f64,
        #[arg(long, default_value_t = 1)]
        min_uses: usize,
        /// Also write train/test split files next to the corpus.
        #[arg(long)]
        test_fraction: Option<f64>,
    },
}

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_PROVIDER: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        e if e.is_provider() => EXIT_PROVIDER,
        _ => EXIT_DATA,
    }
}

fn load_config(cli: &Cli) -> resrec::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io("reading config", path, e))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.work_dir {
        cfg.paths.work_dir = dir.clone();
    }
    if let Some(p) = &cli.provider {
        cfg.provider.endpoint_base = p.clone();
    }
    if cli.provider_token.is_some() {
        cfg.provider.auth_token = cli.provider_token.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.training.seed = seed;
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = load_config(&cli).and_then(|cfg| {
        if let Some(n) = cfg.jobs {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        }
        commands::run(&cli, cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
