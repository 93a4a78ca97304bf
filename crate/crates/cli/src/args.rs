//! Command-line surface. Every command's parsed arguments double as the
//! config snapshot stored in the run manifest.

use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use defsim_core::embedding::{ProviderConfig, REFERENCE_MODEL_ID};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "defsim",
    version,
    about = "Consensus analysis of definition corpora"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Parse corpus files and report their contents.
    IngestCheck(IngestCheckArgs),
    /// Embed corpora into an embedding file.
    Embed(EmbedArgs),
    /// Score candidates against references and rank them by mean similarity.
    Analyze(AnalyzeArgs),
    /// Square similarity table over a handful of definitions.
    Compare(CompareArgs),
    /// Judge new candidate definitions against a reference corpus.
    Evaluate(EvaluateArgs),
    /// Generate composite definitions with a chat service or the offline mock.
    Generate(GenerateArgs),
    /// Re-run the command recorded in a run manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::IngestCheck(_) => "ingest-check",
            Command::Embed(_) => "embed",
            Command::Analyze(_) => "analyze",
            Command::Compare(_) => "compare",
            Command::Evaluate(_) => "evaluate",
            Command::Generate(_) => "generate",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderChoice {
    Local,
    File,
    Remote,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ProviderArgs {
    /// Embedding provider. Defaults to `file` when --embeddings is given, else `local`.
    #[arg(long, value_enum)]
    pub provider: Option<ProviderChoice>,
    /// Embedding file(s) for the file provider.
    #[arg(long = "embeddings")]
    pub embeddings: Vec<PathBuf>,
    /// Base URL of the embedding service.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model id sent to the embedding service.
    #[arg(long, default_value = REFERENCE_MODEL_ID)]
    pub model_id: String,
    /// Dimension of the local hashed embedder.
    #[arg(long, default_value_t = defsim_core::embedding::DEFAULT_LOCAL_DIM)]
    pub dim: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 3)]
    pub max_retries: u32,
    #[arg(long, default_value_t = 30)]
    pub timeout_secs: u64,
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
}

impl ProviderArgs {
    pub fn choice(&self) -> ProviderChoice {
        self.provider.unwrap_or(if self.embeddings.is_empty() {
            ProviderChoice::Local
        } else {
            ProviderChoice::File
        })
    }

    pub fn to_config(&self) -> ProviderConfig {
        let mut c = match self.choice() {
            ProviderChoice::Local => ProviderConfig::local(self.dim),
            ProviderChoice::File => ProviderConfig::file(self.embeddings.clone()),
            ProviderChoice::Remote => ProviderConfig::remote(
                self.endpoint.clone().unwrap_or_default(),
                self.model_id.clone(),
            ),
        };
        c.batch_size = self.batch_size;
        c.max_retries = self.max_retries;
        c.timeout = Duration::from_secs(self.timeout_secs);
        c.max_in_flight = self.max_in_flight;
        c
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    /// Parent directory for per-run output directories.
    #[arg(long, default_value = "runs")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct IngestCheckArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EmbedArgs {
    /// Corpus file(s) to embed; all vectors go into one file.
    #[arg(long = "corpus", required = true)]
    pub corpora: Vec<PathBuf>,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExclusionArgs {
    /// Keep each candidate's own column (and its aliases) when averaging.
    #[arg(long)]
    pub include_self: bool,
    /// Extra id aliases treated as the same definition, `a=b`.
    #[arg(long = "alias", value_name = "A=B")]
    pub aliases: Vec<String>,
    /// Drop the default `base-0.1=ind-58` alias.
    #[arg(long)]
    pub no_default_alias: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long)]
    pub references: PathBuf,
    #[command(flatten)]
    pub exclusion: ExclusionArgs,
    /// Rows shown on stdout.
    #[arg(long, default_value_t = 4)]
    pub top_k: usize,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    /// Comma-separated definition ids (at least two).
    #[arg(long, value_delimiter = ',', required = true)]
    pub ids: Vec<String>,
    /// Corpora holding the ids. Defaults to the bundled fixtures.
    #[arg(long = "corpus")]
    pub corpora: Vec<PathBuf>,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    /// Candidate definitions, one evaluation each.
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long)]
    pub references: PathBuf,
    /// Comma-separated anchor ids.
    #[arg(long, value_delimiter = ',')]
    pub anchors: Vec<String>,
    /// Skip the anchor comparisons.
    #[arg(long, conflicts_with = "anchors")]
    pub no_anchors: bool,
    /// Corpora where anchors not in the references are looked up.
    /// Defaults to the bundled composites.
    #[arg(long = "anchor-corpus")]
    pub anchor_corpora: Vec<PathBuf>,
    #[arg(long, default_value_t = defsim_core::consensus::DEFAULT_ADMISSION_THRESHOLD, allow_negative_numbers = true)]
    pub threshold: f64,
    /// Evaluate candidates in order, admitting each into the corpus the next one sees.
    #[arg(long)]
    pub evolve: bool,
    #[command(flatten)]
    pub exclusion: ExclusionArgs,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    /// Source corpus. Defaults to the bundled 60 individual definitions.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Use the offline mock generator.
    #[arg(long)]
    pub mock: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short = 'n', long = "count", default_value_t = defsim_core::generation::DEFAULT_N_DEFINITIONS)]
    pub n: usize,
    /// Base URL of the chat service.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long, default_value = "gpt-4")]
    pub model_id: String,
    #[arg(long, default_value_t = defsim_core::generation::DEFAULT_TEMPERATURE)]
    pub temperature: f64,
    #[arg(long, default_value_t = defsim_core::generation::DEFAULT_MAX_WORDS)]
    pub max_words: usize,
    /// Send the corpus in messages of this many definitions instead of one message.
    #[arg(long)]
    pub chunk_size: Option<usize>,
    #[arg(long, default_value_t = 300)]
    pub timeout_secs: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}
