//! `entailrank`: command-line driver for the entailment ranking pipeline.
//!
//! Exit status: 0 on success, 2 for usage errors, 3 for validation failures
//! (malformed inputs, broken invariants, run or prediction findings), 4 for
//! filesystem errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use entailrank::bm25::{DEFAULT_B, DEFAULT_K1};
use entailrank::textproc::{
    DEFAULT_SAMPLE_SIZE, DEFAULT_STRIDE, DEFAULT_TOKEN_LIMIT, DEFAULT_WINDOW,
};
use entailrank::{ErrorClass, NormalizeMode};

/// Seed used by every randomized stage unless `--seed` is given.
const DEFAULT_SEED: u64 = 13;

#[derive(Debug, Parser)]
#[command(
    name = "entailrank",
    version,
    about = "Legal case entailment ranking: BM25, run files, answer selection, micro-F1"
)]
struct Cli {
    /// Worker threads for scoring and grid search. Output does not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Log more (-v info, -vv debug). Logs go to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

/// Analyzer and sentence splitter overrides. Index and scoring must agree.
#[derive(Debug, Clone, Args)]
struct TextArgs {
    /// Stopword list, one word per line (default: built-in English list)
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,

    /// Abbreviations that never end a sentence, one per line
    #[arg(long, value_name = "FILE")]
    abbreviations: Option<PathBuf>,

    /// Disable Porter stemming
    #[arg(long)]
    no_stem: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a competition directory tree into a canonical dataset file
    Ingest {
        /// Directory holding one sub-directory per example and optional labels.json
        #[arg(long)]
        root: PathBuf,
        /// Canonical JSON Lines output; its file stem becomes the split name
        #[arg(long)]
        out: PathBuf,
    },

    /// Split a labeled dataset into train and dev parts
    Split {
        #[arg(long)]
        dataset: PathBuf,
        /// Fraction of examples in the train part
        #[arg(long, default_value_t = 0.8)]
        ratio: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        dev_out: PathBuf,
    },

    /// Print dataset statistics
    Stats {
        #[arg(long)]
        dataset: PathBuf,
        /// Count analyzed tokens instead of whitespace tokens
        #[arg(long)]
        analyzed: bool,
        #[command(flatten)]
        text: TextArgs,
        /// Also write the report as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Build a BM25 index over candidate paragraphs and windowed auxiliary documents
    Index {
        /// Dataset whose candidate paragraphs are indexed (repeatable)
        #[arg(long, required = true)]
        dataset: Vec<PathBuf>,
        /// Auxiliary documents, JSON Lines of {doc_id, text} (repeatable)
        #[arg(long)]
        aux_docs: Vec<PathBuf>,
        /// Sentences per auxiliary-document window
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        /// Sentences between window starts
        #[arg(long, default_value_t = DEFAULT_STRIDE)]
        stride: usize,
        #[command(flatten)]
        text: TextArgs,
        #[arg(long)]
        out: PathBuf,
    },

    /// Score every candidate of a dataset with BM25 and write a run file
    #[command(name = "score-bm25")]
    ScoreBm25 {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Per-query score normalization
        #[arg(long, default_value = "max", value_parser = parse_normalize)]
        normalize: NormalizeMode,
        #[arg(long, default_value_t = DEFAULT_K1)]
        k1: f64,
        #[arg(long, default_value_t = DEFAULT_B)]
        b: f64,
        #[arg(long, default_value = "bm25")]
        tag: String,
        #[command(flatten)]
        text: TextArgs,
        #[arg(long)]
        out: PathBuf,
    },

    /// Write reranker scoring requests, one per (example, candidate) pair
    Requests {
        #[arg(long)]
        dataset: PathBuf,
        /// Whitespace-token budget of each rendered input
        #[arg(long, default_value_t = DEFAULT_TOKEN_LIMIT)]
        limit: usize,
        #[arg(long)]
        out: PathBuf,
    },

    /// Validate external scores against a dataset and write a canonical run
    #[command(name = "ingest-scores")]
    IngestScores {
        #[arg(long)]
        dataset: PathBuf,
        /// Lines of `example_id candidate_id logit_true logit_false`
        #[arg(long, conflicts_with = "run", required_unless_present = "run")]
        logits: Option<PathBuf>,
        /// An existing run file
        #[arg(long)]
        run: Option<PathBuf>,
        /// Run tag (default: the input run's tag, or "neural" for logits)
        #[arg(long)]
        tag: Option<String>,
        #[arg(long, default_value = "none", value_parser = parse_normalize)]
        normalize: NormalizeMode,
        #[arg(long)]
        out: PathBuf,
    },

    /// Grid-search the selection rules on labeled examples
    Tune {
        #[arg(long)]
        run: PathBuf,
        /// Labeled dataset to tune on
        #[arg(long)]
        gold: PathBuf,
        /// `default`, `norule`, or `alphas;betas;gammas` with comma-separated values
        #[arg(long, default_value = "default")]
        grid: String,
        /// Tuned parameters (JSON)
        #[arg(long)]
        out: PathBuf,
    },

    /// Apply selection rules to a run
    Select {
        #[arg(long)]
        run: PathBuf,
        /// `alpha,beta,gamma` or a parameters file written by `tune`
        #[arg(long)]
        params: String,
        /// Predictions, one tab-separated `example_id candidate_id` line per answer
        #[arg(long)]
        out: PathBuf,
        /// Selected candidates with scores (JSON Lines), input to `ensemble`
        #[arg(long)]
        selection_out: Option<PathBuf>,
    },

    /// Merge two selections, keeping the higher score, then tune and re-select
    Ensemble {
        #[arg(long)]
        sel_a: PathBuf,
        #[arg(long)]
        sel_b: PathBuf,
        /// Labeled dataset to tune the merged selection on
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, default_value = "default")]
        grid: String,
        /// Final selection (JSON Lines)
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        pred_out: Option<PathBuf>,
        #[arg(long)]
        params_out: Option<PathBuf>,
    },

    /// Score predictions with micro precision, recall and F1
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Report as JSON; not written when evaluation fails
        #[arg(long)]
        out: Option<PathBuf>,
        /// A report written earlier; prints the difference
        #[arg(long)]
        baseline: Option<PathBuf>,
    },

    /// Build augmented (fragment, candidate) training pairs and draw a balanced sample
    Augment {
        /// Labeled dataset
        #[arg(long)]
        dataset: PathBuf,
        /// Base-case paragraphs, JSON Lines of {example_id, paragraph}
        #[arg(long)]
        base: PathBuf,
        /// Sample size; half positive, half negative
        #[arg(short, long, default_value_t = DEFAULT_SAMPLE_SIZE)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_normalize(s: &str) -> Result<NormalizeMode, String> {
    s.parse().map_err(|e: entailrank::Error| e.to_string())
}

#[derive(Debug)]
enum CliError {
    Core(entailrank::Error),
    Findings { what: &'static str, count: usize },
}

impl From<entailrank::Error> for CliError {
    fn from(e: entailrank::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.class() {
                ErrorClass::Usage => 2,
                ErrorClass::Validation => 3,
                ErrorClass::Io => 4,
            },
            CliError::Findings { .. } => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Findings { what, count } => {
                write!(f, "{count} finding(s) in {what}; nothing written")
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }

    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
