mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Retrieval experiments with BM25, RM3 and generative relevance feedback.
#[derive(Debug, Parser)]
#[command(name = "grf", version)]
pub struct Cli {
    /// TOML file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for per-query work (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    pub json: bool,
    /// Abort on recoverable problems such as missing generations.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Seed for any randomness (fold splitting).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an inverted index from a JSONL corpus.
    Index(IndexArgs),
    /// Produce generated text for each topic and subtask.
    Generate(GenerateArgs),
    /// Retrieve for every topic and write a TREC run.
    Run(RunArgs),
    /// Score a run against qrels, optionally testing against a baseline.
    Eval(EvalArgs),
    /// Cross-validated grid search.
    Tune(TuneArgs),
    /// Compare two runs on the baseline's hardest topics.
    HardTopics(HardTopicsArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzerArgs {
    /// Stopword list, one word per line (default: built-in list).
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// `porter` or `none`.
    #[arg(long)]
    pub stemmer: Option<String>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// JSONL with one `{"id": .., "contents": ..}` object per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Skip per-document term vectors (RM3 then becomes unavailable).
    #[arg(long)]
    pub no_doc_vectors: bool,
    #[command(flatten)]
    pub analyzer: AnalyzerArgs,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub topics: Option<PathBuf>,
    /// `all` or a comma-separated list of subtask names.
    #[arg(long, default_value = "all")]
    pub subtasks: String,
    /// Cache directory receiving `<qid>/<subtask>.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Call the completion API (reads GRF_API_KEY and GRF_API_BASE).
    #[arg(long, conflicts_with = "fixtures")]
    pub live: bool,
    /// Serve completions from a fixture directory instead.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub top_p: Option<f64>,
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Args)]
pub struct RetrievalArgs {
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub topics: Option<PathBuf>,
    /// Directory of generations (required for grf methods).
    #[arg(long)]
    pub generations: Option<PathBuf>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub fb_docs: Option<usize>,
    #[arg(long)]
    pub fb_terms: Option<usize>,
    /// RM3 interpolation weight of the original query.
    #[arg(long)]
    pub original_query_weight: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub theta: Option<usize>,
    /// Subtasks concatenated for `grf` (`all` or a comma list).
    #[arg(long)]
    pub subtasks: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// bm25, rm3, grf or grf:<subtask>.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the per-query feedback models as JSON.
    #[arg(long)]
    pub feedback_out: Option<PathBuf>,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    /// Baseline run; significant improvements over it are marked `+`.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub rel_threshold: u32,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// bm25, rm3 or grf.
    #[arg(long)]
    pub method: Option<String>,
    /// Fold file; without one, a seeded 5-fold split is used.
    #[arg(long)]
    pub folds: Option<PathBuf>,
    /// r1000, map or ndcg10.
    #[arg(long)]
    pub objective: Option<String>,
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    /// Where to write the merged cross-validated run.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
}

#[derive(Debug, Args)]
pub struct HardTopicsArgs {
    /// Baseline run; its NDCG@10 picks the hard topics.
    #[arg(long)]
    pub run_a: PathBuf,
    #[arg(long)]
    pub run_b: PathBuf,
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    pub fraction: f64,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files: exit 2.
    Usage(String),
    /// Anything else: exit 1.
    Internal(String),
}

impl From<grf::Error> for CliError {
    fn from(e: grf::Error) -> Self {
        use grf::Error as E;
        let msg = e.to_string();
        match e {
            E::Io { ref source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                CliError::Usage(msg)
            }
            E::DuplicateDocId(_)
            | E::MalformedRecord { .. }
            | E::MissingField { .. }
            | E::Contract(_)
            | E::Config(_)
            | E::UnknownSubtask { .. }
            | E::Version { .. }
            | E::Schema(_)
            | E::NoSharedQueries
            | E::InsufficientQueries(_)
            | E::MissingDocVectors
            | E::MissingSubtask(_)
            | E::EmptyFeedbackText
            | E::EmptyFeedback => CliError::Usage(msg),
            _ => CliError::Internal(msg),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
