//! Batch runs over (combination, train size, seed) leaves.
//!
//! Each leaf directory `out/<combination>/<size>/seed-<seed>/` holds the
//! train and eval splits, the augmented corpus, per-strategy stats, one
//! curriculum manifest per task, the effective config and a `.done` marker
//! written last. Re-running skips finished leaves.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::igt::{parse_corpus, parse_json_corpus, serialize_corpus, IgtError, ParseOptions};
use crate::lexicon::{load_conjugation_table, load_word_list, ConjugationTable, LexiconError};
use crate::prep::{
    self, format_prompts, make_splits, plan_manifest, prompts_to_jsonl, subsample, write_atomic, HyperParameters,
    LanguageNames, PrepError, Task, TrainSize, DEFAULT_EVAL_FRACTION, MANIFEST_FILE,
};
use crate::strategies::{
    apply_combination, enumerate_combinations, validate_combination, AugmentError, AugmentationContext, Combination,
    Lexicons, StrategyName, StrategyStats, DEFAULT_PERM_CAP,
};

pub const DONE_MARKER: &str = ".done";
pub const CONFIG_ECHO: &str = "config.json";
pub const STATS_FILE: &str = "stats.json";
/// Value of a `conjugations` lexicon entry selecting the built-in starter table.
pub const BUILTIN_CONJUGATIONS: &str = "builtin";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Corpus { path: PathBuf, source: IgtError },
    #[error("{path}: {source}")]
    Lexicon { path: PathBuf, source: LexiconError },
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Prep(#[from] PrepError),
    #[error("{0} holds partial output from an interrupted run; use --force to overwrite")]
    PartialOutput(PathBuf),
    #[error("{0} was produced with a different config; use --force to overwrite")]
    StaleOutput(PathBuf),
}

impl PipelineError {
    /// Problems with the request itself rather than with the data it points at.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            PipelineError::Config(_)
                | PipelineError::Augment(
                    AugmentError::UnknownStrategy(_)
                        | AugmentError::InvalidForLanguage { .. }
                        | AugmentError::MissingResource { .. }
                        | AugmentError::DuplicateStrategy(_)
                )
                | PipelineError::Prep(
                    PrepError::InvalidFraction(_)
                        | PrepError::InvalidSize(_)
                        | PrepError::UnknownTask(_)
                        | PrepError::UnknownLanguage(_)
                        | PrepError::UnknownLanguageName(_)
                )
        )
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    #[default]
    Toolbox,
    Json,
}

impl std::str::FromStr for CorpusFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "toolbox" => Ok(CorpusFormat::Toolbox),
            "json" => Ok(CorpusFormat::Json),
            other => Err(format!("unknown corpus format {other:?} (expected toolbox or json)")),
        }
    }
}

/// Read and parse a corpus file.
pub fn load_corpus(
    path: &Path,
    format: CorpusFormat,
    opts: &ParseOptions,
) -> Result<crate::igt::ParsedCorpus, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let parsed = match format {
        CorpusFormat::Toolbox => parse_corpus(&text, opts),
        CorpusFormat::Json => parse_json_corpus(&text, opts),
    };
    parsed.map_err(|source| PipelineError::Corpus { path: path.to_path_buf(), source })
}

/// Lexicon file paths. `conjugations` may be [`BUILTIN_CONJUGATIONS`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conj: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intj: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjugations: Option<PathBuf>,
}

impl LexiconPaths {
    /// Standard file names inside a directory, for the files that exist.
    pub fn from_dir(dir: &Path) -> Self {
        let existing = |name: &str| Some(dir.join(name)).filter(|p| p.is_file());
        LexiconPaths {
            conj: existing("conj.tsv"),
            noise: existing("noise.tsv"),
            intj: existing("intj.tsv"),
            conjugations: existing("conjugations.tsv"),
        }
    }

    /// Entries set in `self` win over `fallback`.
    pub fn or(self, fallback: LexiconPaths) -> Self {
        LexiconPaths {
            conj: self.conj.or(fallback.conj),
            noise: self.noise.or(fallback.noise),
            intj: self.intj.or(fallback.intj),
            conjugations: self.conjugations.or(fallback.conjugations),
        }
    }

    fn resolved(&self, base: &Path) -> Self {
        let join = |p: &Option<PathBuf>| p.as_ref().map(|p| if is_builtin(p) { p.clone() } else { base.join(p) });
        LexiconPaths {
            conj: join(&self.conj),
            noise: join(&self.noise),
            intj: join(&self.intj),
            conjugations: join(&self.conjugations),
        }
    }
}

fn is_builtin(p: &Path) -> bool {
    p.as_os_str() == BUILTIN_CONJUGATIONS
}

/// Load every configured lexicon.
pub fn load_lexicons(paths: &LexiconPaths, strict: bool) -> Result<Lexicons, PipelineError> {
    let read = |p: &Path| fs::read_to_string(p).map_err(io_err(p));
    let list = |name: &str, p: &Option<PathBuf>| -> Result<_, PipelineError> {
        p.as_ref()
            .map(|p| {
                load_word_list(name, &read(p)?).map_err(|source| PipelineError::Lexicon { path: p.clone(), source })
            })
            .transpose()
    };
    let conjugations = match &paths.conjugations {
        None => None,
        Some(p) if is_builtin(p) => Some(ConjugationTable::starter()),
        Some(p) => Some(
            load_conjugation_table(&read(p)?, strict)
                .map_err(|source| PipelineError::Lexicon { path: p.clone(), source })?,
        ),
    };
    Ok(Lexicons {
        conj: list("conj", &paths.conj)?,
        noise: list("noise", &paths.noise)?,
        intj: list("intj", &paths.intj)?,
        conjugations,
    })
}

/// Which combinations to run: `"all"` for the language's full lattice, or explicit labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CombinationSelection {
    Keyword(String),
    List(Vec<String>),
}

impl Default for CombinationSelection {
    fn default() -> Self {
        CombinationSelection::Keyword("all".into())
    }
}

impl CombinationSelection {
    pub fn resolve(&self, language: &str) -> Result<Vec<Combination>, PipelineError> {
        match self {
            CombinationSelection::Keyword(k) if k == "all" => {
                let names = StrategyName::for_language(language).unwrap_or(&StrategyName::ALL);
                Ok(enumerate_combinations(names, language)?)
            }
            CombinationSelection::Keyword(k) => {
                Err(PipelineError::Config(format!("combinations must be \"all\" or a list, got {k:?}")))
            }
            CombinationSelection::List(labels) => {
                let mut out: Vec<Combination> = Vec::new();
                for label in labels {
                    let combo = if label == "baseline" {
                        Combination::baseline(language)
                    } else {
                        Combination::parse(language, label)?
                    };
                    if out.contains(&combo) {
                        return Err(PipelineError::Config(format!("combination {label:?} listed twice")));
                    }
                    out.push(combo);
                }
                if out.is_empty() {
                    return Err(PipelineError::Config("no combinations selected".into()));
                }
                Ok(out)
            }
        }
    }
}

fn default_sizes() -> Vec<TrainSize> {
    TrainSize::STANDARD.to_vec()
}

fn default_seeds() -> Vec<u64> {
    vec![crate::DEFAULT_SEED]
}

fn default_fraction() -> f64 {
    DEFAULT_EVAL_FRACTION
}

fn default_tasks() -> Vec<Task> {
    Task::ALL.to_vec()
}

fn default_perm_cap() -> usize {
    DEFAULT_PERM_CAP
}

/// A pipeline run as read from a JSON config file.
///
/// Relative paths are resolved against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    #[serde(default)]
    pub format: CorpusFormat,
    pub language: String,
    /// Fixed test set; prompts for it are written once under `test/`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    #[serde(default)]
    pub combinations: CombinationSelection,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<TrainSize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_fraction")]
    pub eval_fraction: f64,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub lexicons: LexiconPaths,
    /// Added to the default verbal tags.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verb_tags: Vec<String>,
    #[serde(default = "default_perm_cap")]
    pub perm_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hrl_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperparameters: Option<HyperParameters>,
    #[serde(default)]
    pub strict: bool,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialization cannot fail");
        s.push('\n');
        s
    }

    /// Static checks that need no file access.
    pub fn check(&self) -> Result<(), PipelineError> {
        if self.language.trim().is_empty() {
            return Err(PipelineError::Config("language must not be empty".into()));
        }
        if self.sizes.is_empty() {
            return Err(PipelineError::Config("sizes must not be empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(PipelineError::Config("seeds must not be empty".into()));
        }
        if self.tasks.is_empty() {
            return Err(PipelineError::Config("tasks must not be empty".into()));
        }
        prep::eval_size(1, self.eval_fraction)?;
        if self.perm_cap == 0 {
            return Err(PipelineError::Config("perm_cap must be positive".into()));
        }
        for (what, has_dup) in [
            ("sizes", has_duplicates(&self.sizes)),
            ("seeds", has_duplicates(&self.seeds)),
            ("tasks", has_duplicates(&self.tasks)),
        ] {
            if has_dup {
                return Err(PipelineError::Config(format!("{what} contain duplicates")));
            }
        }
        self.combinations.resolve(&self.language)?;
        self.language_names()?;
        if self.hyperparameters.is_none() {
            HyperParameters::for_language(&self.language)?;
        }
        Ok(())
    }

    pub fn language_names(&self) -> Result<LanguageNames, PipelineError> {
        let defaults = LanguageNames::for_language(&self.language).ok();
        let language = self.language_name.clone().or_else(|| defaults.as_ref().map(|d| d.language.clone()));
        let hrl = self.hrl_name.clone().or_else(|| defaults.as_ref().map(|d| d.hrl.clone()));
        match (language, hrl) {
            (Some(language), Some(hrl)) => Ok(LanguageNames { language, hrl }),
            _ => Err(PrepError::UnknownLanguageName(self.language.clone()).into()),
        }
    }
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    items.iter().enumerate().any(|(i, a)| items[..i].contains(a))
}

/// One unit of work.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leaf {
    pub combination: Combination,
    pub size: TrainSize,
    pub seed: u64,
}

impl Leaf {
    pub fn relative_dir(&self) -> PathBuf {
        PathBuf::from(self.combination.dir_name()).join(self.size.to_string()).join(format!("seed-{}", self.seed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafStatus {
    Written,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafSummary {
    pub dir: PathBuf,
    pub status: LeafStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineSummary {
    pub leaves: Vec<LeafSummary>,
    pub skipped_blocks: usize,
}

impl PipelineSummary {
    pub fn written(&self) -> usize {
        self.leaves.iter().filter(|l| l.status == LeafStatus::Written).count()
    }
}

#[derive(Serialize)]
struct LeafEcho<'a> {
    config: &'a PipelineConfig,
    combination: String,
    train_size: TrainSize,
    seed: u64,
}

#[derive(Serialize)]
struct LeafStats<'a> {
    combination: String,
    train_size: TrainSize,
    seed: u64,
    train_examples: usize,
    eval_examples: usize,
    augmented_examples: usize,
    strategies: &'a [StrategyStats],
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialization cannot fail");
    s.push('\n');
    s
}

/// Run every leaf of `config` into `out`.
///
/// `base` is the directory relative config paths are resolved against.
/// Finished leaves with a matching config echo are skipped; other existing
/// leaf directories are an error unless `force` is set.
pub fn run_pipeline(
    config: &PipelineConfig,
    base: &Path,
    out: &Path,
    force: bool,
    execution: Execution,
) -> Result<PipelineSummary, PipelineError> {
    config.check()?;
    let combinations = config.combinations.resolve(&config.language)?;
    let names = config.language_names()?;
    let lexicons = load_lexicons(&config.lexicons.resolved(base), config.strict)?;
    let mut ctx = AugmentationContext::new(0, lexicons).with_execution(Execution::Sequential);
    ctx.verb_tags.extend(config.verb_tags.iter().cloned());
    ctx.perm_cap = config.perm_cap;
    for combo in &combinations {
        validate_combination(combo, &config.language, &ctx)?;
    }

    let opts = ParseOptions::new(&config.language).strict(config.strict);
    let corpus_path = base.join(&config.corpus);
    let parsed = load_corpus(&corpus_path, config.format, &opts.clone().provenance(&config.corpus.to_string_lossy()))?;
    let mut skipped_blocks = parsed.skipped.len();
    let corpus = parsed.corpus;

    let mut splits = Vec::new();
    for &seed in &config.seeds {
        let (train, eval) = make_splits(&corpus, config.eval_fraction, seed)?;
        for &size in &config.sizes {
            if let TrainSize::Count(n) = size {
                if n > train.len() {
                    return Err(PrepError::SizeTooLarge { requested: n, available: train.len() }.into());
                }
            }
        }
        splits.push((seed, train, eval));
    }

    fs::create_dir_all(out).map_err(io_err(out))?;
    if let Some(test) = &config.test {
        let test_path = base.join(test);
        let parsed = load_corpus(&test_path, config.format, &opts.clone().provenance(&test.to_string_lossy()))?;
        skipped_blocks += parsed.skipped.len();
        for &task in &config.tasks {
            let prompts = format_prompts(&parsed.corpus, task, &names)?;
            let path = out.join("test").join(format!("{task}.jsonl"));
            write_atomic(&path, prompts_to_jsonl(&prompts).as_bytes())?;
        }
    }

    let mut leaves = Vec::new();
    for combo in &combinations {
        for &size in &config.sizes {
            for &seed in &config.seeds {
                leaves.push(Leaf { combination: combo.clone(), size, seed });
            }
        }
    }

    let run_leaf = |leaf: &Leaf| -> Result<LeafSummary, PipelineError> {
        let dir = out.join(leaf.relative_dir());
        let echo = json_line(&LeafEcho {
            config,
            combination: leaf.combination.label(),
            train_size: leaf.size,
            seed: leaf.seed,
        });
        if dir.exists() {
            let finished = dir.join(DONE_MARKER).is_file();
            let same = fs::read_to_string(dir.join(CONFIG_ECHO)).map(|e| e == echo).unwrap_or(false);
            match (finished, same, force) {
                (true, true, false) => return Ok(LeafSummary { dir, status: LeafStatus::Skipped }),
                (_, _, true) => fs::remove_dir_all(&dir).map_err(io_err(&dir))?,
                (true, false, false) => return Err(PipelineError::StaleOutput(dir)),
                (false, _, false) => {
                    let empty = fs::read_dir(&dir).map_err(io_err(&dir))?.next().is_none();
                    if !empty {
                        return Err(PipelineError::PartialOutput(dir));
                    }
                }
            }
        }
        let (_, train, eval) = splits.iter().find(|(s, _, _)| *s == leaf.seed).expect("split exists for every seed");
        let sample = subsample(train, leaf.size, leaf.seed)?;
        let mut leaf_ctx = ctx.clone();
        leaf_ctx.global_seed = leaf.seed;
        let augmented = apply_combination(&sample, &leaf.combination, &leaf_ctx)?;

        write_atomic(&dir.join("train.txt"), serialize_corpus(&sample).as_bytes())?;
        write_atomic(&dir.join("eval.txt"), serialize_corpus(eval).as_bytes())?;
        write_atomic(&dir.join("augmented.txt"), serialize_corpus(&augmented.corpus).as_bytes())?;
        let stats = LeafStats {
            combination: leaf.combination.label(),
            train_size: leaf.size,
            seed: leaf.seed,
            train_examples: sample.len(),
            eval_examples: eval.len(),
            augmented_examples: augmented.corpus.len(),
            strategies: &augmented.stats,
        };
        write_atomic(&dir.join(STATS_FILE), json_line(&stats).as_bytes())?;
        for &task in &config.tasks {
            let task_dir = dir.join(task.as_str());
            let plan = plan_manifest(
                &augmented.corpus,
                &sample,
                &config.language,
                task,
                &names,
                config.hyperparameters.clone(),
            )?;
            for (name, contents) in &plan.files {
                write_atomic(&task_dir.join(name), contents.as_bytes())?;
            }
            write_atomic(
                &task_dir.join("eval.jsonl"),
                prompts_to_jsonl(&format_prompts(eval, task, &names)?).as_bytes(),
            )?;
            write_atomic(&task_dir.join(MANIFEST_FILE), prep::manifest_to_json(&plan.manifest).as_bytes())?;
        }
        write_atomic(&dir.join(CONFIG_ECHO), echo.as_bytes())?;
        write_atomic(&dir.join(DONE_MARKER), b"")?;
        Ok(LeafSummary { dir, status: LeafStatus::Written })
    };

    let leaves = execution.try_map(&leaves, run_leaf)?;
    Ok(PipelineSummary { leaves, skipped_blocks })
}

/// Load a config file and run it with paths relative to the file's directory.
pub fn run_pipeline_file(
    config_path: &Path,
    out: &Path,
    force: bool,
    execution: Execution,
) -> Result<PipelineSummary, PipelineError> {
    let text = fs::read_to_string(config_path).map_err(io_err(config_path))?;
    let config = PipelineConfig::from_json(&text)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    run_pipeline(&config, base, out, force, execution)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults() {
        let c = PipelineConfig::from_json(r#"{"corpus": "train.txt", "language": "usp"}"#).unwrap();
        assert_eq!(c.sizes, TrainSize::STANDARD.to_vec());
        assert_eq!(c.seeds, vec![crate::DEFAULT_SEED]);
        assert_eq!(c.tasks, Task::ALL.to_vec());
        assert_eq!(c.combinations.resolve("usp").unwrap().len(), 64);
        assert_eq!(c.combinations.resolve("arp").unwrap().len(), 8);
        c.check().unwrap();
        let again = PipelineConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn config_errors() {
        let bad = |json: &str| PipelineConfig::from_json(json).and_then(|c| c.check()).unwrap_err();
        assert!(bad(r#"{"corpus": "x", "language": "usp", "combinations": ["InsConj+Swap"]}"#).is_config_error());
        assert!(bad(r#"{"corpus": "x", "language": "usp", "combinations": ["Perm"]}"#).is_config_error());
        assert!(bad(r#"{"corpus": "x", "language": "usp", "sizes": []}"#).is_config_error());
        assert!(bad(r#"{"corpus": "x", "language": "usp", "sizes": [0]}"#).is_config_error());
        assert!(bad(r#"{"corpus": "x", "language": "usp", "eval_fraction": 1.0}"#).is_config_error());
        assert!(bad(r#"{"corpus": "x", "language": "usp", "typo": 1}"#).is_config_error());
        assert!(bad(r#"{"corpus": "x", "language": "xyz"}"#).is_config_error());
        assert!(bad(r#"{"corpus": "x", "language": "usp", "seeds": [1, 1]}"#).is_config_error());
        let ok = PipelineConfig::from_json(
            r#"{"corpus": "x", "language": "xyz", "language_name": "X", "hrl_name": "Y",
                "hyperparameters": {"batch_size": 8, "learning_rate": 0.001, "weight_decay": 0.0, "augmented_steps": 1, "original_steps": 2}}"#,
        )
        .unwrap();
        ok.check().unwrap();
    }

    #[test]
    fn explicit_combination_list() {
        let sel = CombinationSelection::List(vec!["baseline".into(), "Dup+InsConj".into()]);
        let combos = sel.resolve("usp").unwrap();
        assert!(combos[0].is_baseline());
        assert_eq!(combos[1].label(), "InsConj+Dup");
        let dup = CombinationSelection::List(vec!["Dup".into(), "Dup".into()]);
        assert!(matches!(dup.resolve("usp"), Err(PipelineError::Config(_))));
    }

    #[test]
    fn leaf_paths() {
        let leaf = Leaf { combination: Combination::baseline("usp"), size: TrainSize::Full, seed: 7 };
        assert_eq!(leaf.relative_dir(), PathBuf::from("baseline/full/seed-7"));
    }
}
