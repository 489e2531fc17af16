//! Eval splits, size subsamples, prompt files and curriculum manifests.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::igt::{Corpus, IgtExample};
use crate::rng::{sample_indices, substream};

#[derive(Debug, Error)]
pub enum PrepError {
    #[error("eval fraction must be in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("cannot split an empty corpus")]
    EmptyCorpus,
    #[error("eval split of {eval} leaves no training examples out of {total}")]
    EmptyTrain { eval: usize, total: usize },
    #[error("requested {requested} examples but only {available} are available")]
    SizeTooLarge { requested: usize, available: usize },
    #[error("invalid train size {0:?} (expected a positive integer or \"full\")")]
    InvalidSize(String),
    #[error("unknown task {0:?} (expected to_hrl, from_hrl or igt)")]
    UnknownTask(String),
    #[error("example {id:?} has no {line} line, required for task {task}")]
    MissingLine { id: String, line: &'static str, task: Task },
    #[error("no default hyperparameters for language {0:?}; pass explicit values")]
    UnknownLanguage(String),
    #[error("no display name for language {0:?}; pass one explicitly")]
    UnknownLanguageName(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Target language into the high-resource language.
    ToHrl,
    /// High-resource language into the target language.
    FromHrl,
    /// Target-language sentence to its gloss line.
    Igt,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::ToHrl, Task::FromHrl, Task::Igt];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::ToHrl => "to_hrl",
            Task::FromHrl => "from_hrl",
            Task::Igt => "igt",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = PrepError;
    fn from_str(s: &str) -> Result<Self, PrepError> {
        Task::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| PrepError::UnknownTask(s.into()))
    }
}

/// Number of training examples: a fixed count or the whole training split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TrainSize {
    Count(usize),
    Full,
}

impl TrainSize {
    pub const STANDARD: [TrainSize; 5] =
        [TrainSize::Count(100), TrainSize::Count(500), TrainSize::Count(1000), TrainSize::Count(5000), TrainSize::Full];
}

impl fmt::Display for TrainSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainSize::Count(n) => write!(f, "{n}"),
            TrainSize::Full => f.write_str("full"),
        }
    }
}

impl FromStr for TrainSize {
    type Err = PrepError;
    fn from_str(s: &str) -> Result<Self, PrepError> {
        match s.trim() {
            "full" => Ok(TrainSize::Full),
            other => match other.parse::<usize>() {
                Ok(n) if n > 0 => Ok(TrainSize::Count(n)),
                _ => Err(PrepError::InvalidSize(s.into())),
            },
        }
    }
}

impl Serialize for TrainSize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TrainSize::Count(n) => s.serialize_u64(*n as u64),
            TrainSize::Full => s.serialize_str("full"),
        }
    }
}

impl<'de> Deserialize<'de> for TrainSize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(0) => Err(serde::de::Error::custom("train size must be positive")),
            Raw::Count(n) => Ok(TrainSize::Count(n as usize)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

pub const DEFAULT_EVAL_FRACTION: f64 = 0.05;

/// Eval-split and subsampling settings for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub eval_fraction: f64,
    pub seed: u64,
    pub sizes: Vec<TrainSize>,
}

/// `ceil(total * fraction)`, tolerant of representation error in the product.
pub fn eval_size(total: usize, fraction: f64) -> Result<usize, PrepError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(PrepError::InvalidFraction(fraction));
    }
    let exact = total as f64 * fraction;
    Ok((exact - 1e-9).ceil().max(0.0) as usize)
}

fn pick(corpus: &Corpus, mut indices: Vec<usize>) -> Vec<IgtExample> {
    indices.sort_unstable();
    indices.into_iter().map(|i| corpus.examples[i].clone()).collect()
}

/// Split into `(train, eval)`. Eval is drawn uniformly without replacement;
/// both parts keep the original example order.
pub fn make_splits(corpus: &Corpus, eval_fraction: f64, seed: u64) -> Result<(Corpus, Corpus), PrepError> {
    if corpus.is_empty() {
        return Err(PrepError::EmptyCorpus);
    }
    let total = corpus.len();
    let eval = eval_size(total, eval_fraction)?;
    if eval >= total {
        return Err(PrepError::EmptyTrain { eval, total });
    }
    let mut rng = substream(seed, &["eval-split"]);
    let eval_idx = sample_indices(&mut rng, total, eval);
    let mut in_eval = vec![false; total];
    for &i in &eval_idx {
        in_eval[i] = true;
    }
    let train: Vec<IgtExample> =
        corpus.examples.iter().zip(&in_eval).filter(|(_, e)| !**e).map(|(ex, _)| ex.clone()).collect();
    Ok((corpus.with_examples(train), corpus.with_examples(pick(corpus, eval_idx))))
}

/// Uniform subsample without replacement; `Full` returns the input unchanged.
pub fn subsample(train: &Corpus, size: TrainSize, seed: u64) -> Result<Corpus, PrepError> {
    match size {
        TrainSize::Full => Ok(train.clone()),
        TrainSize::Count(n) if n > train.len() => Err(PrepError::SizeTooLarge { requested: n, available: train.len() }),
        TrainSize::Count(n) => {
            let mut rng = substream(seed, &["subsample", &n.to_string()]);
            Ok(train.with_examples(pick(train, sample_indices(&mut rng, train.len(), n))))
        }
    }
}

/// Display names used in prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageNames {
    /// Name of the target language, e.g. `Uspanteko`.
    pub language: String,
    /// Name of the high-resource language, e.g. `Spanish`.
    pub hrl: String,
}

impl LanguageNames {
    pub fn for_language(code: &str) -> Result<Self, PrepError> {
        let (language, hrl) = match code {
            "usp" => ("Uspanteko", "Spanish"),
            "arp" => ("Arapaho", "English"),
            other => return Err(PrepError::UnknownLanguageName(other.into())),
        };
        Ok(LanguageNames { language: language.into(), hrl: hrl.into() })
    }
}

/// Prompt prefix for a task.
pub fn prompt_prefix(task: Task, names: &LanguageNames) -> String {
    match task {
        Task::ToHrl => format!("Translate into {}: ", names.hrl),
        Task::FromHrl => format!("Translate into {}: ", names.language),
        Task::Igt => "Gloss: ".to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPair {
    pub input: String,
    pub label: String,
}

pub fn format_prompt(ex: &IgtExample, task: Task, names: &LanguageNames) -> Result<PromptPair, PrepError> {
    let missing = |line| PrepError::MissingLine { id: ex.id.clone(), line, task };
    let prefix = prompt_prefix(task, names);
    let translation = || {
        let t = ex.translation.trim();
        if t.is_empty() {
            Err(missing("translation"))
        } else {
            Ok(t.to_string())
        }
    };
    Ok(match task {
        Task::ToHrl => PromptPair { input: format!("{prefix}{}", ex.surface_line()), label: translation()? },
        Task::FromHrl => PromptPair { input: format!("{prefix}{}", translation()?), label: ex.surface_line() },
        Task::Igt => PromptPair {
            input: format!("{prefix}{}", ex.surface_line()),
            label: ex.gloss_line().ok_or_else(|| missing("gloss"))?,
        },
    })
}

/// One `(input, label)` pair per example.
pub fn format_prompts(corpus: &Corpus, task: Task, names: &LanguageNames) -> Result<Vec<PromptPair>, PrepError> {
    corpus.examples.iter().map(|ex| format_prompt(ex, task, names)).collect()
}

/// JSON Lines: one `{"input": ..., "label": ...}` object per line.
pub fn prompts_to_jsonl(prompts: &[PromptPair]) -> String {
    let mut out = String::new();
    for p in prompts {
        out.push_str(&serde_json::to_string(p).expect("prompt serialization cannot fail"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParameters {
    pub batch_size: u32,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub augmented_steps: u32,
    pub original_steps: u32,
}

impl HyperParameters {
    pub fn for_language(code: &str) -> Result<Self, PrepError> {
        match code {
            "usp" => Ok(HyperParameters {
                batch_size: 32,
                learning_rate: 2e-4,
                weight_decay: 0.5,
                augmented_steps: 500,
                original_steps: 1000,
            }),
            "arp" => Ok(HyperParameters {
                batch_size: 16,
                learning_rate: 2e-4,
                weight_decay: 0.5,
                augmented_steps: 2000,
                original_steps: 4000,
            }),
            other => Err(PrepError::UnknownLanguage(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    /// Prompt file, relative to the manifest's directory.
    pub file: String,
    pub steps: u32,
    pub examples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHyperParameters {
    pub batch_size: u32,
    pub learning_rate: f64,
    pub weight_decay: f64,
}

/// Two-phase training plan: synthetic data, optimizer reset, original data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumManifest {
    pub language: String,
    pub task: Task,
    pub prompt_prefix: String,
    pub phase1: Phase,
    pub phase2: Phase,
    pub optimizer_reset_between: bool,
    pub hyperparameters: ManifestHyperParameters,
}

pub const AUGMENTED_PROMPTS: &str = "phase1_augmented.jsonl";
pub const ORIGINAL_PROMPTS: &str = "phase2_original.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// A manifest plus the prompt files it references.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestPlan {
    pub manifest: CurriculumManifest,
    pub files: Vec<(String, String)>,
}

/// Plan a curriculum. With an empty augmented corpus both phases train on the original data.
pub fn plan_manifest(
    augmented: &Corpus,
    original: &Corpus,
    language: &str,
    task: Task,
    names: &LanguageNames,
    hyper: Option<HyperParameters>,
) -> Result<ManifestPlan, PrepError> {
    let hyper = match hyper {
        Some(h) => h,
        None => HyperParameters::for_language(language)?,
    };
    let original_prompts = format_prompts(original, task, names)?;
    let mut files = Vec::new();
    let phase1 = if augmented.is_empty() {
        Phase { file: ORIGINAL_PROMPTS.into(), steps: hyper.augmented_steps, examples: original_prompts.len() }
    } else {
        let aug = format_prompts(augmented, task, names)?;
        files.push((AUGMENTED_PROMPTS.to_string(), prompts_to_jsonl(&aug)));
        Phase { file: AUGMENTED_PROMPTS.into(), steps: hyper.augmented_steps, examples: aug.len() }
    };
    files.push((ORIGINAL_PROMPTS.to_string(), prompts_to_jsonl(&original_prompts)));
    let manifest = CurriculumManifest {
        language: language.into(),
        task,
        prompt_prefix: prompt_prefix(task, names),
        phase1,
        phase2: Phase { file: ORIGINAL_PROMPTS.into(), steps: hyper.original_steps, examples: original_prompts.len() },
        optimizer_reset_between: true,
        hyperparameters: ManifestHyperParameters {
            batch_size: hyper.batch_size,
            learning_rate: hyper.learning_rate,
            weight_decay: hyper.weight_decay,
        },
    };
    Ok(ManifestPlan { manifest, files })
}

pub fn manifest_to_json(manifest: &CurriculumManifest) -> String {
    let mut out = serde_json::to_string_pretty(manifest).expect("manifest serialization cannot fail");
    out.push('\n');
    out
}

/// Write `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), PrepError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.persist(path).map_err(|e| PrepError::Io(e.error))?;
    Ok(())
}

/// Write the plan's prompt files and `manifest.json` into `dir`.
pub fn build_manifest(
    augmented: &Corpus,
    original: &Corpus,
    language: &str,
    task: Task,
    names: &LanguageNames,
    hyper: Option<HyperParameters>,
    dir: &Path,
) -> Result<CurriculumManifest, PrepError> {
    let plan = plan_manifest(augmented, original, language, task, names, hyper)?;
    for (name, contents) in &plan.files {
        write_atomic(&dir.join(name), contents.as_bytes())?;
    }
    write_atomic(&dir.join(MANIFEST_FILE), manifest_to_json(&plan.manifest).as_bytes())?;
    Ok(plan.manifest)
}
