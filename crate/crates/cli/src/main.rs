//! `igtaug`: augmentation, splits, prompt files, scoring and result analysis
//! for interlinear glossed text corpora.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use igt_augment::pipeline::CorpusFormat;

pub const LEXICON_DIR_ENV: &str = "IGTAUG_LEXICON_DIR";

#[derive(Parser)]
#[command(name = "igtaug", version, about = "Data augmentation and evaluation for interlinear glossed text")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count examples passing each alignment check.
    Validate(ValidateArgs),
    /// Apply a strategy combination to a corpus.
    Augment(AugmentArgs),
    /// Split off an eval set and subsample the training part.
    Split(SplitArgs),
    /// Write prompt files, or a curriculum manifest with --out-dir.
    Format(FormatArgs),
    /// chrF of a hypothesis file against a reference file, line by line.
    Score(ScoreArgs),
    /// Summarize a results CSV.
    Analyze(AnalyzeArgs),
    /// Run a full experiment grid from a JSON config.
    Pipeline(PipelineArgs),
}

#[derive(Args, Clone)]
pub struct CorpusArgs {
    /// Corpus file.
    pub corpus: PathBuf,
    /// `toolbox` or `json`.
    #[arg(long, default_value = "toolbox")]
    pub format: CorpusFormat,
    /// Language code of the corpus (e.g. usp, arp).
    #[arg(short, long, default_value = "und")]
    pub language: String,
    /// Fail on the first malformed block instead of skipping it.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Clone, Default)]
pub struct LexiconArgs {
    /// Directory with conj.tsv, noise.tsv, intj.tsv and conjugations.tsv.
    #[arg(long, env = LEXICON_DIR_ENV)]
    pub lexicon_dir: Option<PathBuf>,
    #[arg(long)]
    pub conj: Option<PathBuf>,
    #[arg(long)]
    pub noise: Option<PathBuf>,
    #[arg(long)]
    pub intj: Option<PathBuf>,
    /// Conjugation table TSV, or `builtin` for the starter table.
    #[arg(long)]
    pub conjugations: Option<PathBuf>,
}

#[derive(Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    /// Strategy names joined by `,` or `+`; empty for the baseline.
    #[arg(short, long, default_value = "")]
    pub strategies: String,
    #[arg(long, default_value_t = igt_augment::DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub lexicons: LexiconArgs,
    /// Extra gloss tags that mark a verb.
    #[arg(long = "verb-tag")]
    pub verb_tags: Vec<String>,
    #[arg(long, default_value_t = igt_augment::strategies::DEFAULT_PERM_CAP)]
    pub perm_cap: usize,
    /// Augmented corpus destination; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Per-strategy stats JSON destination.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    #[arg(long, default_value_t = igt_augment::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = igt_augment::prep::DEFAULT_EVAL_FRACTION)]
    pub eval_fraction: f64,
    /// Training subsample size: a positive count or `full`.
    #[arg(long, default_value = "full")]
    pub size: String,
    /// Receives train.txt and eval.txt.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct FormatArgs {
    /// Original (non-augmented) training corpus.
    #[command(flatten)]
    pub input: CorpusArgs,
    /// to_hrl, from_hrl or igt.
    #[arg(long)]
    pub task: String,
    /// Display name of the corpus language in prompts.
    #[arg(long)]
    pub language_name: Option<String>,
    /// Display name of the high-resource language in prompts.
    #[arg(long)]
    pub hrl_name: Option<String>,
    /// Prompt file destination; stdout when absent. Ignored with --out-dir.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Write a two-phase manifest and its prompt files here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Augmented corpus for phase 1 (baseline when absent).
    #[arg(long)]
    pub augmented: Option<PathBuf>,
    #[arg(long)]
    pub batch_size: Option<u32>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub augmented_steps: Option<u32>,
    #[arg(long)]
    pub original_steps: Option<u32>,
}

#[derive(Args)]
pub struct ScoreArgs {
    /// One hypothesis per line.
    pub hypotheses: PathBuf,
    /// One reference per line.
    pub references: PathBuf,
    /// Only count n-grams inside words.
    #[arg(long)]
    pub modified: bool,
    #[arg(long, default_value_t = 6)]
    pub max_n: usize,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// CSV with columns task,language,combination,train_size,seed,split,chrf.
    pub results: PathBuf,
    #[arg(long)]
    pub task: String,
    #[arg(short, long)]
    pub language: String,
    #[arg(long)]
    pub baseline_deltas: bool,
    #[arg(long)]
    pub marginal: bool,
    /// Rank the best K combinations by eval chrF.
    #[arg(long, value_name = "K")]
    pub top: Option<usize>,
    /// Write one CSV per table here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct PipelineArgs {
    /// JSON config; relative paths inside it resolve against its directory.
    pub config: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    /// Overwrite partial or stale leaf directories.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub sequential: bool,
    #[arg(short, long)]
    pub language: Option<String>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Comma-separated sizes (counts or `full`).
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<String>>,
    /// `all` or `;`-separated combination labels (`baseline` for none).
    #[arg(long)]
    pub combinations: Option<String>,
    /// Comma-separated tasks.
    #[arg(long, value_delimiter = ',')]
    pub tasks: Option<Vec<String>>,
    #[arg(long)]
    pub eval_fraction: Option<f64>,
    #[command(flatten)]
    pub lexicons: LexiconArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Augment(a) => commands::augment(a),
        Command::Split(a) => commands::split(a),
        Command::Format(a) => commands::format(a),
        Command::Score(a) => commands::score(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Pipeline(a) => commands::pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}
