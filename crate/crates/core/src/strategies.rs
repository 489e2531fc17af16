//! Augmentation strategies and the seeded combination pipeline.
//!
//! Each strategy maps one original example to zero or more synthetic ones.
//! Strategies never consume each other's output: a combination applies every
//! member to the original corpus and concatenates the results in canonical
//! strategy order, then corpus order.
//!
//! Random choices for a `(strategy, example)` pair come from
//! [`rng::substream`]`(seed, [strategy, example id])`, so results do not
//! depend on scheduling or on the position of the example in the corpus.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand_core::RngCore;
use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::igt::{check_alignment, is_verb, split_morphemes, Corpus, IgtExample, MORPHEME_SEP};
use crate::lexicon::{retense_translation, ConjugationTable, InsertionList, LexEntry, RetenseDirection};
use crate::rng::{self, substream};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AugmentError {
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("strategy {strategy} is not defined for language {language:?}")]
    InvalidForLanguage { strategy: StrategyName, language: String },
    #[error("strategy {strategy} needs the {resource} resource")]
    MissingResource { strategy: StrategyName, resource: Resource },
    #[error("duplicate strategy {0} in list")]
    DuplicateStrategy(StrategyName),
    #[error("example {0:?} has no gloss line")]
    MissingGloss(String),
    #[error("example {0:?} is not four-line aligned")]
    NotAligned(String),
    #[error("example {id:?} has {words} word(s); deletion needs at least 2")]
    TooFewWords { id: String, words: usize },
    #[error("index {index} out of range for example {id:?} with {words} word(s)")]
    IndexOutOfRange { id: String, index: usize, words: usize },
    #[error("invalid TAM pairs: {0}")]
    InvalidTamPairs(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum StrategyName {
    UpdTam,
    InsConj,
    InsNoise,
    DelAny,
    DelExcl,
    Dup,
    InsIntj,
    Perm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Linguistic,
    NonLinguistic,
}

/// Something a strategy needs from the [`AugmentationContext`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Resource {
    ConjList,
    NoiseList,
    IntjList,
    ConjugationTable,
    VerbTags,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resource::ConjList => "conjunction list",
            Resource::NoiseList => "noise word list",
            Resource::IntjList => "interjection list",
            Resource::ConjugationTable => "conjugation table",
            Resource::VerbTags => "verb tag set",
        })
    }
}

/// Descriptor of a strategy: its category and required resources.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrategySpec {
    pub name: StrategyName,
    pub category: Category,
    pub resources: Vec<Resource>,
}

pub const USPANTEKO_STRATEGIES: [StrategyName; 6] = [
    StrategyName::UpdTam,
    StrategyName::InsConj,
    StrategyName::InsNoise,
    StrategyName::DelAny,
    StrategyName::DelExcl,
    StrategyName::Dup,
];

pub const ARAPAHO_STRATEGIES: [StrategyName; 3] = [StrategyName::InsIntj, StrategyName::InsNoise, StrategyName::Perm];

impl StrategyName {
    /// All strategies in canonical order.
    pub const ALL: [StrategyName; 8] = [
        StrategyName::UpdTam,
        StrategyName::InsConj,
        StrategyName::InsNoise,
        StrategyName::DelAny,
        StrategyName::DelExcl,
        StrategyName::Dup,
        StrategyName::InsIntj,
        StrategyName::Perm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyName::UpdTam => "UpdTam",
            StrategyName::InsConj => "InsConj",
            StrategyName::InsNoise => "InsNoise",
            StrategyName::DelAny => "DelAny",
            StrategyName::DelExcl => "DelExcl",
            StrategyName::Dup => "Dup",
            StrategyName::InsIntj => "InsIntj",
            StrategyName::Perm => "Perm",
        }
    }

    /// Hyphenated display label, e.g. `Upd-TAM`.
    pub fn label(self) -> &'static str {
        match self {
            StrategyName::UpdTam => "Upd-TAM",
            StrategyName::InsConj => "Ins-Conj",
            StrategyName::InsNoise => "Ins-Noise",
            StrategyName::DelAny => "Del-Any",
            StrategyName::DelExcl => "Del-Excl",
            StrategyName::Dup => "Dup",
            StrategyName::InsIntj => "Ins-Intj",
            StrategyName::Perm => "Perm",
        }
    }

    pub fn category(self) -> Category {
        match self {
            StrategyName::InsNoise | StrategyName::DelAny | StrategyName::Dup => Category::NonLinguistic,
            _ => Category::Linguistic,
        }
    }

    pub fn resources(self) -> Vec<Resource> {
        match self {
            StrategyName::UpdTam => vec![Resource::ConjugationTable],
            StrategyName::InsConj => vec![Resource::ConjList],
            StrategyName::InsNoise => vec![Resource::NoiseList],
            StrategyName::InsIntj => vec![Resource::IntjList],
            StrategyName::DelExcl => vec![Resource::VerbTags],
            StrategyName::DelAny | StrategyName::Dup | StrategyName::Perm => Vec::new(),
        }
    }

    pub fn spec(self) -> StrategySpec {
        StrategySpec { name: self, category: self.category(), resources: self.resources() }
    }

    /// Strategies defined for a language code, or `None` for languages
    /// without a fixed strategy set (every strategy is then allowed).
    pub fn for_language(language: &str) -> Option<&'static [StrategyName]> {
        match language {
            "usp" => Some(&USPANTEKO_STRATEGIES),
            "arp" => Some(&ARAPAHO_STRATEGIES),
            _ => None,
        }
    }

    pub fn valid_for(self, language: &str) -> bool {
        StrategyName::for_language(language).is_none_or(|set| set.contains(&self))
    }
}

impl fmt::Display for StrategyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyName {
    type Err = AugmentError;

    /// Accepts the CamelCase name (`UpdTam`) or the hyphenated label (`Upd-TAM`).
    fn from_str(s: &str) -> Result<Self, AugmentError> {
        let s = s.trim();
        StrategyName::ALL
            .into_iter()
            .find(|n| n.as_str() == s || n.label() == s)
            .ok_or_else(|| AugmentError::UnknownStrategy(s.to_string()))
    }
}

/// Parse a comma- or `+`-separated strategy list.
pub fn parse_strategy_list(list: &str) -> Result<Vec<StrategyName>, AugmentError> {
    list.split([',', '+']).filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// A set of strategies forming one experimental setting.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Combination {
    pub strategies: BTreeSet<StrategyName>,
    pub language: String,
}

impl Combination {
    pub fn new(language: &str, strategies: impl IntoIterator<Item = StrategyName>) -> Result<Self, AugmentError> {
        let strategies: BTreeSet<StrategyName> = strategies.into_iter().collect();
        if let Some(bad) = strategies.iter().find(|s| !s.valid_for(language)) {
            return Err(AugmentError::InvalidForLanguage { strategy: *bad, language: language.into() });
        }
        Ok(Combination { strategies, language: language.into() })
    }

    pub fn baseline(language: &str) -> Self {
        Combination { strategies: BTreeSet::new(), language: language.into() }
    }

    /// Parse a `+`-joined label; the empty string is the baseline.
    pub fn parse(language: &str, label: &str) -> Result<Self, AugmentError> {
        Combination::new(language, parse_strategy_list(label)?)
    }

    pub fn is_baseline(&self) -> bool {
        self.strategies.is_empty()
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    pub fn contains(&self, s: StrategyName) -> bool {
        self.strategies.contains(&s)
    }

    pub fn with(&self, s: StrategyName) -> Combination {
        let mut out = self.clone();
        out.strategies.insert(s);
        out
    }

    /// `+`-joined names in canonical order; `""` for the baseline.
    pub fn label(&self) -> String {
        self.strategies.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("+")
    }

    /// Directory-safe name: the label, or `baseline`.
    pub fn dir_name(&self) -> String {
        if self.is_baseline() {
            "baseline".to_string()
        } else {
            self.label()
        }
    }

    /// Ordering used for enumeration and tie-breaks: size, then canonical sequence.
    pub fn lattice_cmp(&self, other: &Combination) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| self.strategies.iter().cmp(other.strategies.iter()))
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dir_name())
    }
}

/// All subsets of `names`, including the empty baseline, ordered by size then lexicographically.
pub fn enumerate_combinations(names: &[StrategyName], language: &str) -> Result<Vec<Combination>, AugmentError> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(*n) {
            return Err(AugmentError::DuplicateStrategy(*n));
        }
    }
    let mut out = Vec::with_capacity(1 << names.len());
    for mask in 0u64..(1u64 << names.len()) {
        let members = names.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, n)| *n);
        out.push(Combination::new(language, members)?);
    }
    out.sort_by(Combination::lattice_cmp);
    Ok(out)
}

/// One aspect pair: swapping `tag_a`/`prefix_a` to `tag_b`/`prefix_b` moves the
/// translation in `a_to_b` direction; the reverse swap uses the opposite direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TamPair {
    pub tag_a: String,
    pub prefix_a: String,
    pub tag_b: String,
    pub prefix_b: String,
    pub a_to_b: RetenseDirection,
}

impl TamPair {
    /// Incompletive `INC`/`t-` against completive `COM`/`x-`.
    pub fn inc_com() -> Self {
        TamPair {
            tag_a: "INC".into(),
            prefix_a: "t".into(),
            tag_b: "COM".into(),
            prefix_b: "x".into(),
            a_to_b: RetenseDirection::PresentToPreterite,
        }
    }
}

struct TamSwap<'a> {
    old_tag: &'a str,
    new_tag: &'a str,
    old_prefix: &'a str,
    new_prefix: &'a str,
    direction: RetenseDirection,
}

/// A swap table over aspect tags. Every tag and prefix occurs once, so
/// applying the swap twice is the identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TamPairs(Vec<TamPair>);

impl TamPairs {
    pub fn new(pairs: Vec<TamPair>) -> Result<Self, AugmentError> {
        let mut tags = HashSet::new();
        let mut prefixes = HashSet::new();
        for p in &pairs {
            for tag in [&p.tag_a, &p.tag_b] {
                if tag.is_empty() || tag.contains(MORPHEME_SEP) || !tags.insert(tag.clone()) {
                    return Err(AugmentError::InvalidTamPairs(format!(
                        "tag {tag:?} is empty, contains '-', or repeats"
                    )));
                }
            }
            for prefix in [&p.prefix_a, &p.prefix_b] {
                if prefix.is_empty() || prefix.contains(MORPHEME_SEP) || !prefixes.insert(prefix.clone()) {
                    return Err(AugmentError::InvalidTamPairs(format!(
                        "prefix {prefix:?} is empty, contains '-', or repeats"
                    )));
                }
            }
        }
        Ok(TamPairs(pairs))
    }

    pub fn pairs(&self) -> &[TamPair] {
        &self.0
    }

    fn swap_for_gloss(&self, gloss_word: &str) -> Option<TamSwap<'_>> {
        self.0.iter().find_map(|p| {
            let starts = |tag: &str| gloss_word.strip_prefix(tag).is_some_and(|r| r.starts_with(MORPHEME_SEP));
            if starts(&p.tag_a) {
                Some(TamSwap {
                    old_tag: &p.tag_a,
                    new_tag: &p.tag_b,
                    old_prefix: &p.prefix_a,
                    new_prefix: &p.prefix_b,
                    direction: p.a_to_b,
                })
            } else if starts(&p.tag_b) {
                let back = match p.a_to_b {
                    RetenseDirection::PresentToPreterite => RetenseDirection::PreteriteToPresent,
                    RetenseDirection::PreteriteToPresent => RetenseDirection::PresentToPreterite,
                };
                Some(TamSwap {
                    old_tag: &p.tag_b,
                    new_tag: &p.tag_a,
                    old_prefix: &p.prefix_b,
                    new_prefix: &p.prefix_a,
                    direction: back,
                })
            } else {
                None
            }
        })
    }
}

impl Default for TamPairs {
    fn default() -> Self {
        TamPairs(vec![TamPair::inc_com()])
    }
}

/// Word lists and tables consumed by the linguistic strategies.
#[derive(Debug, Clone, Default)]
pub struct Lexicons {
    pub conj: Option<InsertionList>,
    pub noise: Option<InsertionList>,
    pub intj: Option<InsertionList>,
    pub conjugations: Option<ConjugationTable>,
}

pub const DEFAULT_PERM_CAP: usize = 10;

/// Everything strategies read besides the example itself.
#[derive(Debug, Clone)]
pub struct AugmentationContext {
    pub global_seed: u64,
    pub lexicons: Lexicons,
    /// Gloss morphemes that mark a word as verbal.
    pub verb_tags: BTreeSet<String>,
    pub tam_pairs: TamPairs,
    pub perm_cap: usize,
    pub execution: Execution,
}

impl AugmentationContext {
    pub fn new(global_seed: u64, lexicons: Lexicons) -> Self {
        AugmentationContext {
            global_seed,
            lexicons,
            verb_tags: ["COM", "INC"].iter().map(|s| s.to_string()).collect(),
            tam_pairs: TamPairs::default(),
            perm_cap: DEFAULT_PERM_CAP,
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn list_for(&self, strategy: StrategyName) -> Option<&InsertionList> {
        match strategy {
            StrategyName::InsConj => self.lexicons.conj.as_ref(),
            StrategyName::InsNoise => self.lexicons.noise.as_ref(),
            StrategyName::InsIntj => self.lexicons.intj.as_ref(),
            _ => None,
        }
    }

    fn has(&self, resource: Resource) -> bool {
        match resource {
            Resource::ConjList => self.lexicons.conj.is_some(),
            Resource::NoiseList => self.lexicons.noise.is_some(),
            Resource::IntjList => self.lexicons.intj.is_some(),
            Resource::ConjugationTable => self.lexicons.conjugations.is_some(),
            Resource::VerbTags => !self.verb_tags.is_empty(),
        }
    }

    fn rng_for(&self, strategy: StrategyName, example: &IgtExample) -> impl RngCore {
        substream(self.global_seed, &[strategy.as_str(), &example.id])
    }
}

fn derived_id(ex: &IgtExample, strategy: StrategyName, detail: Option<&str>) -> String {
    match detail {
        Some(d) => format!("{}+{}:{}", ex.id, strategy.as_str(), d),
        None => format!("{}+{}", ex.id, strategy.as_str()),
    }
}

/// Prepend a lexicon entry to every line of `example`.
pub fn insert_front(
    example: &IgtExample,
    entry: &LexEntry,
    strategy: StrategyName,
) -> Result<IgtExample, AugmentError> {
    let gloss = example.gloss_words.as_ref().ok_or_else(|| AugmentError::MissingGloss(example.id.clone()))?;
    let prepend = |words: &[String], first: &str| {
        std::iter::once(first.to_string()).chain(words.iter().cloned()).collect::<Vec<_>>()
    };
    let translation = if example.translation.is_empty() {
        entry.translation.clone()
    } else {
        format!("{} {}", entry.translation, example.translation)
    };
    Ok(IgtExample {
        id: derived_id(example, strategy, Some(&entry.form)),
        language: example.language.clone(),
        surface_words: prepend(&example.surface_words, &entry.form),
        segmentation_words: example.segmentation_words.as_ref().map(|s| prepend(s, &entry.form)),
        gloss_words: Some(prepend(gloss, &entry.gloss_label)),
        translation,
        metadata: example.metadata.clone(),
    })
}

/// One output per list entry, in list order. Examples without a gloss yield nothing.
pub fn run_insertion_strategy(example: &IgtExample, list: &InsertionList, strategy: StrategyName) -> Vec<IgtExample> {
    list.entries.iter().filter_map(|e| insert_front(example, e, strategy).ok()).collect()
}

/// Swap the aspect marker of the first `INC-`/`COM-` word and retense the translation.
pub fn update_tam(example: &IgtExample, ctx: &AugmentationContext) -> Option<IgtExample> {
    let table = ctx.lexicons.conjugations.as_ref()?;
    let gloss = example.gloss_words.as_ref()?;
    let seg = example.segmentation_words.as_ref()?;
    if !check_alignment(example).word_aligned {
        return None;
    }
    let (idx, swap) = gloss.iter().enumerate().find_map(|(i, g)| ctx.tam_pairs.swap_for_gloss(g).map(|s| (i, s)))?;

    let seg_rest = seg[idx].strip_prefix(swap.old_prefix).filter(|r| r.starts_with(MORPHEME_SEP))?;
    let surface_rest = example.surface_words[idx].strip_prefix(swap.old_prefix)?;
    let gloss_rest = &gloss[idx][swap.old_tag.len()..];
    let translation = retense_translation(&example.translation, swap.direction, table)?;

    let mut out = example.clone();
    out.id = derived_id(example, StrategyName::UpdTam, None);
    out.surface_words[idx] = format!("{}{}", swap.new_prefix, surface_rest);
    if let Some(s) = out.segmentation_words.as_mut() {
        s[idx] = format!("{}{}", swap.new_prefix, seg_rest);
    }
    if let Some(g) = out.gloss_words.as_mut() {
        g[idx] = format!("{}{}", swap.new_tag, gloss_rest);
    }
    out.translation = translation;
    Some(out)
}

fn check_editable(example: &IgtExample, index: usize, min_words: usize) -> Result<(), AugmentError> {
    if !check_alignment(example).four_line_aligned {
        return Err(AugmentError::NotAligned(example.id.clone()));
    }
    let words = example.word_count();
    if words < min_words {
        return Err(AugmentError::TooFewWords { id: example.id.clone(), words });
    }
    if index >= words {
        return Err(AugmentError::IndexOutOfRange { id: example.id.clone(), index, words });
    }
    Ok(())
}

fn edit_all_lines(example: &IgtExample, id: String, edit: impl Fn(&mut Vec<String>)) -> IgtExample {
    let mut out = example.clone();
    out.id = id;
    edit(&mut out.surface_words);
    if let Some(s) = out.segmentation_words.as_mut() {
        edit(s);
    }
    if let Some(g) = out.gloss_words.as_mut() {
        edit(g);
    }
    let mut tokens: Vec<String> = example.translation_tokens().into_iter().map(str::to_string).collect();
    edit(&mut tokens);
    out.translation = tokens.join(" ");
    out
}

/// Remove word `index` from every line, translation tokens included.
pub fn delete_word(example: &IgtExample, index: usize) -> Result<IgtExample, AugmentError> {
    delete_word_as(example, index, StrategyName::DelAny)
}

fn delete_word_as(example: &IgtExample, index: usize, strategy: StrategyName) -> Result<IgtExample, AugmentError> {
    check_editable(example, index, 2)?;
    Ok(edit_all_lines(example, derived_id(example, strategy, Some(&index.to_string())), |w| {
        w.remove(index);
    }))
}

/// Deletion at a given index with the eligibility and verb-exclusion rules applied.
pub fn deletion_at(
    example: &IgtExample,
    index: usize,
    ctx: &AugmentationContext,
    exclude_verbs: bool,
) -> Option<IgtExample> {
    let strategy = if exclude_verbs { StrategyName::DelExcl } else { StrategyName::DelAny };
    if exclude_verbs {
        let gloss = example.gloss_words.as_ref()?.get(index)?;
        if is_verb(gloss, &ctx.verb_tags).unwrap_or(true) {
            return None;
        }
    }
    delete_word_as(example, index, strategy).ok()
}

/// Delete a uniformly drawn word. With `exclude_verbs`, a verbal draw skips the example.
pub fn run_deletion_strategy(
    example: &IgtExample,
    ctx: &AugmentationContext,
    exclude_verbs: bool,
) -> Option<IgtExample> {
    let words = example.word_count();
    if words < 2 || !check_alignment(example).four_line_aligned {
        return None;
    }
    let strategy = if exclude_verbs { StrategyName::DelExcl } else { StrategyName::DelAny };
    let index = rng::below(&mut ctx.rng_for(strategy, example), words as u64) as usize;
    deletion_at(example, index, ctx, exclude_verbs)
}

/// Duplicate word `index` in place (the copy follows the original) on every line.
pub fn duplicate_at(example: &IgtExample, index: usize) -> Result<IgtExample, AugmentError> {
    check_editable(example, index, 1)?;
    Ok(edit_all_lines(example, derived_id(example, StrategyName::Dup, Some(&index.to_string())), |w| {
        let copy = w[index].clone();
        w.insert(index + 1, copy);
    }))
}

/// Duplicate a uniformly drawn word; four-line-aligned examples only.
pub fn duplicate_word(example: &IgtExample, ctx: &AugmentationContext) -> Option<IgtExample> {
    if !check_alignment(example).four_line_aligned {
        return None;
    }
    let index = rng::below(&mut ctx.rng_for(StrategyName::Dup, example), example.word_count() as u64) as usize;
    duplicate_at(example, index).ok()
}

fn factorial(n: usize) -> Option<u64> {
    (1..=n as u64).try_fold(1u64, |acc, k| acc.checked_mul(k))
}

/// The `rank`-th permutation of `0..n` in lexicographic order.
fn permutation_from_rank(n: usize, mut rank: u64) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    for remaining in (1..=n).rev() {
        let block = factorial(remaining - 1).expect("rank decoding only used for n <= 20");
        let pick = (rank / block) as usize;
        rank %= block;
        out.push(pool.remove(pick));
    }
    out
}

/// Distinct non-identity permutations of `0..n`, `min(cap, n! - 1)` of them.
///
/// When every non-identity permutation fits under the cap they are all
/// returned in lexicographic order; otherwise they are sampled uniformly
/// without replacement, in draw order.
pub fn sample_permutations<R: RngCore>(rng: &mut R, n: usize, cap: usize) -> Vec<Vec<usize>> {
    if n <= 1 || cap == 0 {
        return Vec::new();
    }
    match factorial(n) {
        Some(total) if total - 1 <= cap as u64 => (1..total).map(|r| permutation_from_rank(n, r)).collect(),
        Some(total) => {
            let mut seen = HashSet::new();
            let mut out = Vec::with_capacity(cap);
            while out.len() < cap {
                let rank = 1 + rng::below(rng, total - 1);
                if seen.insert(rank) {
                    out.push(permutation_from_rank(n, rank));
                }
            }
            out
        }
        None => {
            let identity: Vec<usize> = (0..n).collect();
            let mut seen = HashSet::new();
            let mut out = Vec::with_capacity(cap);
            while out.len() < cap {
                let mut p = identity.clone();
                rng::shuffle(rng, &mut p);
                if p != identity && seen.insert(p.clone()) {
                    out.push(p);
                }
            }
            out
        }
    }
}

/// Reorder the words of an example. Surface, segmentation and gloss move
/// together; the translation is kept as is.
pub fn permute(example: &IgtExample, ctx: &AugmentationContext) -> Vec<IgtExample> {
    if example.gloss_words.is_none() || !check_alignment(example).word_aligned {
        return Vec::new();
    }
    let perms = sample_permutations(&mut ctx.rng_for(StrategyName::Perm, example), example.word_count(), ctx.perm_cap);
    perms
        .into_iter()
        .map(|p| {
            let reorder = |w: &Vec<String>| p.iter().map(|&i| w[i].clone()).collect::<Vec<_>>();
            let detail = p.iter().map(usize::to_string).collect::<Vec<_>>().join(".");
            IgtExample {
                id: derived_id(example, StrategyName::Perm, Some(&detail)),
                language: example.language.clone(),
                surface_words: reorder(&example.surface_words),
                segmentation_words: example.segmentation_words.as_ref().map(reorder),
                gloss_words: example.gloss_words.as_ref().map(reorder),
                translation: example.translation.clone(),
                metadata: example.metadata.clone(),
            }
        })
        .collect()
}

/// All outputs of one strategy for one original example.
pub fn apply_strategy(example: &IgtExample, strategy: StrategyName, ctx: &AugmentationContext) -> Vec<IgtExample> {
    match strategy {
        StrategyName::InsConj | StrategyName::InsNoise | StrategyName::InsIntj => {
            ctx.list_for(strategy).map(|list| run_insertion_strategy(example, list, strategy)).unwrap_or_default()
        }
        StrategyName::UpdTam => update_tam(example, ctx).into_iter().collect(),
        StrategyName::DelAny => run_deletion_strategy(example, ctx, false).into_iter().collect(),
        StrategyName::DelExcl => run_deletion_strategy(example, ctx, true).into_iter().collect(),
        StrategyName::Dup => duplicate_word(example, ctx).into_iter().collect(),
        StrategyName::Perm => permute(example, ctx),
    }
}

/// Realized output count of one strategy over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyStats {
    pub strategy: StrategyName,
    pub label: &'static str,
    pub category: Category,
    pub inputs: usize,
    pub outputs: usize,
    /// Outputs per original example.
    pub average: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedCorpus {
    pub corpus: Corpus,
    pub stats: Vec<StrategyStats>,
}

/// Check that `combo` can run on `language` with the resources in `ctx`.
pub fn validate_combination(
    combo: &Combination,
    language: &str,
    ctx: &AugmentationContext,
) -> Result<(), AugmentError> {
    for &strategy in &combo.strategies {
        if !strategy.valid_for(language) {
            return Err(AugmentError::InvalidForLanguage { strategy, language: language.into() });
        }
        if let Some(&resource) = strategy.resources().iter().find(|r| !ctx.has(**r)) {
            return Err(AugmentError::MissingResource { strategy, resource });
        }
    }
    Ok(())
}

/// Apply each strategy of `combo` to every original example and concatenate.
pub fn apply_combination(
    corpus: &Corpus,
    combo: &Combination,
    ctx: &AugmentationContext,
) -> Result<AugmentedCorpus, AugmentError> {
    validate_combination(combo, &corpus.language, ctx)?;
    let mut examples = Vec::new();
    let mut stats = Vec::new();
    for &strategy in &combo.strategies {
        let per_example = ctx.execution.map(&corpus.examples, |ex| apply_strategy(ex, strategy, ctx));
        let before = examples.len();
        examples.extend(per_example.into_iter().flatten());
        let outputs = examples.len() - before;
        let inputs = corpus.len();
        stats.push(StrategyStats {
            strategy,
            label: strategy.label(),
            category: strategy.category(),
            inputs,
            outputs,
            average: if inputs == 0 { 0.0 } else { outputs as f64 / inputs as f64 },
        });
    }
    let provenance = if corpus.provenance.is_empty() {
        format!("augmented:{}", combo.dir_name())
    } else {
        format!("{}+augmented:{}", corpus.provenance, combo.dir_name())
    };
    Ok(AugmentedCorpus { corpus: Corpus { examples, language: corpus.language.clone(), provenance }, stats })
}

/// Morpheme counts per word position, where segmentation and gloss are comparable.
pub fn morpheme_profile(example: &IgtExample) -> Option<Vec<(usize, usize)>> {
    let seg = example.segmentation_words.as_ref()?;
    let gloss = example.gloss_words.as_ref()?;
    if seg.len() != gloss.len() {
        return None;
    }
    Some(seg.iter().zip(gloss).map(|(s, g)| (split_morphemes(s).len(), split_morphemes(g).len())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::igt::{parse_corpus, serialize_corpus, ParseOptions};
    use crate::lexicon::load_conjugation_table;

    fn usp() -> IgtExample {
        IgtExample::from_lines(
            "t5",
            "usp",
            "wi' neen tb'ank juntir",
            Some("wi' neen t-b'an-k juntiir"),
            Some("EXS INT INC-hacer-SC todo"),
            "Tienen que hacer todo",
        )
    }

    fn arp() -> IgtExample {
        IgtExample::from_lines(
            "t6",
            "arp",
            "Nihtooneete3eino' hini' xouu",
            None,
            Some("PAST-almost-run.into-1S that(aforementioned).those skunk"),
            "I almost ran into that skunk .",
        )
    }

    fn ctx() -> AugmentationContext {
        let table =
            load_conjugation_table("tienen\ttener\tpresent\t3pl\ntuvieron\ttener\tpreterite\t3pl\n", true).unwrap();
        AugmentationContext::new(7, Lexicons { conjugations: Some(table), ..Default::default() })
    }

    fn lines(ex: &IgtExample) -> [String; 4] {
        [
            ex.surface_line(),
            ex.segmentation_line().unwrap_or_default(),
            ex.gloss_line().unwrap_or_default(),
            ex.translation.clone(),
        ]
    }

    #[test]
    fn categories() {
        use StrategyName::*;
        for s in [UpdTam, InsConj, DelExcl, InsIntj, Perm] {
            assert_eq!(s.category(), Category::Linguistic, "{s}");
        }
        for s in [InsNoise, DelAny, Dup] {
            assert_eq!(s.category(), Category::NonLinguistic, "{s}");
        }
    }

    #[test]
    fn names_parse_both_spellings() {
        assert_eq!("Upd-TAM".parse::<StrategyName>().unwrap(), StrategyName::UpdTam);
        assert_eq!("DelExcl".parse::<StrategyName>().unwrap(), StrategyName::DelExcl);
        assert!("Swap".parse::<StrategyName>().is_err());
        assert_eq!(parse_strategy_list("InsConj+Dup").unwrap(), vec![StrategyName::InsConj, StrategyName::Dup]);
        assert_eq!(parse_strategy_list("").unwrap(), vec![]);
    }

    #[test]
    fn combination_language_check() {
        assert!(Combination::new("usp", [StrategyName::Perm]).is_err());
        assert!(Combination::new("arp", [StrategyName::Perm, StrategyName::InsNoise]).is_ok());
        assert!(Combination::new("xxx", StrategyName::ALL).is_ok());
        let c = Combination::parse("usp", "Dup+InsConj").unwrap();
        assert_eq!(c.label(), "InsConj+Dup");
    }

    #[test]
    fn lattice_sizes_and_order() {
        assert_eq!(enumerate_combinations(&USPANTEKO_STRATEGIES, "usp").unwrap().len(), 64);
        assert_eq!(enumerate_combinations(&ARAPAHO_STRATEGIES, "arp").unwrap().len(), 8);
        let empty = enumerate_combinations(&[], "usp").unwrap();
        assert_eq!(empty, vec![Combination::baseline("usp")]);
        let arp = enumerate_combinations(&ARAPAHO_STRATEGIES, "arp").unwrap();
        let labels: Vec<String> = arp.iter().map(Combination::label).collect();
        assert_eq!(
            labels,
            [
                "",
                "InsNoise",
                "InsIntj",
                "Perm",
                "InsNoise+InsIntj",
                "InsNoise+Perm",
                "InsIntj+Perm",
                "InsNoise+InsIntj+Perm"
            ]
        );
        assert!(enumerate_combinations(&[StrategyName::Dup, StrategyName::Dup], "usp").is_err());
    }

    #[test]
    fn tam_pairs_validation() {
        let mut dup = TamPair::inc_com();
        dup.tag_b = "INC".into();
        assert!(TamPairs::new(vec![dup]).is_err());
        assert!(TamPairs::new(vec![TamPair::inc_com()]).is_ok());
    }

    #[test]
    fn upd_tam_worked_example() {
        let out = update_tam(&usp(), &ctx()).unwrap();
        assert_eq!(
            lines(&out),
            [
                "wi' neen xb'ank juntir",
                "wi' neen x-b'an-k juntiir",
                "EXS INT COM-hacer-SC todo",
                "tuvieron que hacer todo"
            ]
        );
        assert_eq!(out.id, "t5+UpdTam");
    }

    #[test]
    fn upd_tam_involution_on_lines() {
        let once = update_tam(&usp(), &ctx()).unwrap();
        let twice = update_tam(&once, &ctx()).unwrap();
        assert_eq!(twice.surface_words, usp().surface_words);
        assert_eq!(twice.segmentation_words, usp().segmentation_words);
        assert_eq!(twice.gloss_words, usp().gloss_words);
        assert_eq!(twice.translation, "tienen que hacer todo");
    }

    #[test]
    fn upd_tam_skips() {
        let c = ctx();
        let no_aspect = IgtExample::from_lines("a", "usp", "wi' neen", Some("wi' neen"), Some("EXS INT"), "Hay que");
        assert!(update_tam(&no_aspect, &c).is_none());
        // surface does not start with the prefix letter
        let mut odd = usp();
        odd.surface_words[2] = "Tb'ank".into();
        assert!(update_tam(&odd, &c).is_none());
        // no segmentation
        let mut noseg = usp();
        noseg.segmentation_words = None;
        assert!(update_tam(&noseg, &c).is_none());
        // no matching verb in the translation
        let mut untranslatable = usp();
        untranslatable.translation = "Todo bien".into();
        assert!(update_tam(&untranslatable, &c).is_none());
        // no table at all
        assert!(update_tam(&usp(), &AugmentationContext::new(1, Lexicons::default())).is_none());
    }

    #[test]
    fn insertion_worked_examples() {
        let conj = insert_front(&usp(), &LexEntry::new("Pwes", "pues", "Pues"), StrategyName::InsConj).unwrap();
        assert_eq!(
            lines(&conj),
            [
                "Pwes wi' neen tb'ank juntir",
                "Pwes wi' neen t-b'an-k juntiir",
                "pues EXS INT INC-hacer-SC todo",
                "Pues Tienen que hacer todo"
            ]
        );
        assert_eq!(conj.id, "t5+InsConj:Pwes");
        let noise =
            insert_front(&usp(), &LexEntry::new("Saneb'", "arena@de@rio", "Harenas del río"), StrategyName::InsNoise)
                .unwrap();
        assert_eq!(
            lines(&noise),
            [
                "Saneb' wi' neen tb'ank juntir",
                "Saneb' wi' neen t-b'an-k juntiir",
                "arena@de@rio EXS INT INC-hacer-SC todo",
                "Harenas del río Tienen que hacer todo"
            ]
        );
        let intj =
            insert_front(&arp(), &LexEntry::new("Yeheihoo", "gee.whiz", "Gee whiz"), StrategyName::InsIntj).unwrap();
        assert_eq!(intj.surface_line(), "Yeheihoo Nihtooneete3eino' hini' xouu");
        assert!(intj.segmentation_words.is_none());
        assert_eq!(intj.gloss_line().unwrap(), "gee.whiz PAST-almost-run.into-1S that(aforementioned).those skunk");
        assert_eq!(intj.translation, "Gee whiz I almost ran into that skunk .");
    }

    #[test]
    fn insertion_needs_gloss() {
        let mut ex = usp();
        ex.gloss_words = None;
        assert!(matches!(
            insert_front(&ex, &LexEntry::new("a", "b", "c"), StrategyName::InsConj),
            Err(AugmentError::MissingGloss(_))
        ));
    }

    #[test]
    fn insertion_is_exhaustive() {
        let list =
            InsertionList::new("conj", vec![LexEntry::new("A", "a", "A"), LexEntry::new("B", "b", "B")]).unwrap();
        let out = run_insertion_strategy(&usp(), &list, StrategyName::InsConj);
        assert_eq!(out.len(), 2);
        assert_eq!(out[1], insert_front(&usp(), &list.entries[1], StrategyName::InsConj).unwrap());
        let one = InsertionList::new("conj", vec![LexEntry::new("A", "a", "A")]).unwrap();
        assert_eq!(run_insertion_strategy(&usp(), &one, StrategyName::InsConj).len(), 1);
    }

    #[test]
    fn deletion_worked_examples() {
        let del = delete_word(&usp(), 2).unwrap();
        assert_eq!(lines(&del), ["wi' neen juntir", "wi' neen juntiir", "EXS INT todo", "Tienen que todo"]);
        let c = ctx();
        let excl = deletion_at(&usp(), 3, &c, true).unwrap();
        assert_eq!(lines(&excl), ["wi' neen tb'ank", "wi' neen t-b'an-k", "EXS INT INC-hacer-SC", "Tienen que hacer"]);
        assert!(deletion_at(&usp(), 2, &c, true).is_none());
        assert_eq!(lines(&deletion_at(&usp(), 2, &c, false).unwrap()), lines(&del));
    }

    #[test]
    fn deletion_preconditions() {
        assert!(matches!(delete_word(&arp(), 0), Err(AugmentError::NotAligned(_))));
        let one = IgtExample::from_lines("o", "usp", "a", None, Some("A"), "a");
        assert!(matches!(delete_word(&one, 0), Err(AugmentError::TooFewWords { .. })));
        assert!(matches!(delete_word(&usp(), 4), Err(AugmentError::IndexOutOfRange { .. })));
        let two = IgtExample::from_lines("o", "usp", "a b", None, Some("A B"), "x y");
        assert_eq!(delete_word(&two, 0).unwrap().surface_line(), "b");
        assert!(run_deletion_strategy(&arp(), &ctx(), false).is_none());
        assert!(run_deletion_strategy(&one, &ctx(), false).is_none());
    }

    #[test]
    fn dup_worked_example() {
        let dup = duplicate_at(&usp(), 2).unwrap();
        assert_eq!(
            lines(&dup),
            [
                "wi' neen tb'ank tb'ank juntir",
                "wi' neen t-b'an-k t-b'an-k juntiir",
                "EXS INT INC-hacer-SC INC-hacer-SC todo",
                "Tienen que hacer hacer todo"
            ]
        );
        let one = IgtExample::from_lines("o", "usp", "a", Some("a"), Some("A"), "x");
        assert_eq!(lines(&duplicate_at(&one, 0).unwrap()), ["a a", "a a", "A A", "x x"]);
        assert!(duplicate_word(&arp(), &ctx()).is_none());
    }

    #[test]
    fn permutation_counts() {
        let c = ctx();
        let one = IgtExample::from_lines("o", "arp", "a", None, Some("A"), "x");
        assert!(permute(&one, &c).is_empty());
        let out = permute(&arp(), &c);
        assert_eq!(out.len(), 5);
        assert!(out.iter().any(|e| e.surface_line() == "hini' xouu Nihtooneete3eino'"
            && e.gloss_line().unwrap() == "that(aforementioned).those skunk PAST-almost-run.into-1S"));
        assert!(out.iter().all(|e| e.translation == arp().translation));
        let five = IgtExample::from_lines("f", "arp", "a b c d e", None, Some("A B C D E"), "x");
        let out = permute(&five, &c);
        assert_eq!(out.len(), 10);
        let distinct: HashSet<String> = out.iter().map(IgtExample::surface_line).collect();
        assert_eq!(distinct.len(), 10);
        assert!(!distinct.contains("a b c d e"));
    }

    #[test]
    fn permutations_of_long_sentences() {
        let mut rng = substream(1, &["long"]);
        let perms = sample_permutations(&mut rng, 25, 10);
        assert_eq!(perms.len(), 10);
        let identity: Vec<usize> = (0..25).collect();
        assert!(perms.iter().all(|p| p != &identity));
    }

    #[test]
    fn rank_decoding_is_lexicographic() {
        let all: Vec<Vec<usize>> = (0..6).map(|r| permutation_from_rank(3, r)).collect();
        assert_eq!(all, vec![vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0]]);
    }

    #[test]
    fn combination_requires_resources() {
        let corpus = Corpus::new("usp", "", vec![usp()]).unwrap();
        let combo = Combination::new("usp", [StrategyName::InsConj]).unwrap();
        let err = apply_combination(&corpus, &combo, &ctx()).unwrap_err();
        assert_eq!(
            err,
            AugmentError::MissingResource { strategy: StrategyName::InsConj, resource: Resource::ConjList }
        );
        let no_table = AugmentationContext::new(1, Lexicons::default());
        let combo = Combination::new("usp", [StrategyName::UpdTam]).unwrap();
        assert!(matches!(apply_combination(&corpus, &combo, &no_table), Err(AugmentError::MissingResource { .. })));
    }

    #[test]
    fn baseline_combination_is_empty() {
        let corpus = Corpus::new("usp", "", vec![usp()]).unwrap();
        let out = apply_combination(&corpus, &Combination::baseline("usp"), &ctx()).unwrap();
        assert!(out.corpus.is_empty());
        assert!(out.stats.is_empty());
    }

    #[test]
    fn union_semantics_and_determinism() {
        let text = "\\t a b c\n\\m a b c\n\\g A B C\n\\l x y z\n\n\\t d e\n\\m d e\n\\g D INC-e\n\\l v w\n";
        let corpus = parse_corpus(text, &ParseOptions::new("usp")).unwrap().corpus;
        let mut c = ctx();
        c.lexicons.conj = Some(InsertionList::new("conj", vec![LexEntry::new("P", "p", "P")]).unwrap());
        let both = Combination::new("usp", [StrategyName::InsConj, StrategyName::Dup]).unwrap();
        let ins = Combination::new("usp", [StrategyName::InsConj]).unwrap();
        let dup = Combination::new("usp", [StrategyName::Dup]).unwrap();
        let n_both = apply_combination(&corpus, &both, &c).unwrap();
        let n_ins = apply_combination(&corpus, &ins, &c).unwrap().corpus.len();
        let n_dup = apply_combination(&corpus, &dup, &c).unwrap().corpus.len();
        assert_eq!(n_both.corpus.len(), n_ins + n_dup);
        assert_eq!(n_both.stats[0].strategy, StrategyName::InsConj);
        let again = apply_combination(&corpus, &both, &c.clone().with_execution(Execution::Sequential)).unwrap();
        assert_eq!(serialize_corpus(&n_both.corpus), serialize_corpus(&again.corpus));
    }
}
