//! IGT records, the Toolbox-style block format and its JSON mirror.
//!
//! A block is a run of non-blank lines, each starting with a backslash
//! prefix followed by a single space and the content:
//!
//! ```text
//! \id usp-17
//! \t wi' neen tb'ank juntir
//! \m wi' neen t-b'an-k juntiir
//! \g EXS INT INC-hacer-SC todo
//! \l Tienen que hacer todo
//! ```
//!
//! `\t` (transcription) is required. `\m` (segmentation), `\g` (gloss),
//! `\l` (translation), `\id` and `\lang` are optional. Any other prefix is
//! kept as metadata in lenient mode and rejected in strict mode.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Morpheme delimiter inside segmentation and gloss words.
pub const MORPHEME_SEP: char = '-';
/// Joiner for multi-word stem translations inside one gloss word.
pub const STEM_JOINER: char = '@';

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IgtError {
    #[error("line {line}: duplicate line prefix \\{prefix} in block")]
    DuplicatePrefix { line: usize, prefix: String },
    #[error("line {line}: block has no \\t transcription line")]
    MissingTranscription { line: usize },
    #[error("line {line}: transcription line is empty")]
    EmptyTranscription { line: usize },
    #[error("line {line}: unknown line prefix \\{prefix}")]
    UnknownPrefix { line: usize, prefix: String },
    #[error("line {line}: expected a line starting with a backslash prefix")]
    MalformedLine { line: usize },
    #[error("duplicate example id {0:?}")]
    DuplicateId(String),
    #[error("verb tag set is empty")]
    EmptyVerbTags,
    #[error("invalid JSON corpus: {0}")]
    Json(String),
}

/// One parallel record of a glossed corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IgtExample {
    pub id: String,
    pub language: String,
    pub surface_words: Vec<String>,
    pub segmentation_words: Option<Vec<String>>,
    pub gloss_words: Option<Vec<String>>,
    pub translation: String,
    /// Unrecognized `\prefix content` lines, in file order (prefix without backslash).
    pub metadata: Vec<(String, String)>,
}

impl IgtExample {
    /// Builds an example from space-joined lines. Empty optional lines become `None`.
    pub fn from_lines(
        id: &str,
        language: &str,
        surface: &str,
        segmentation: Option<&str>,
        gloss: Option<&str>,
        translation: &str,
    ) -> Self {
        IgtExample {
            id: id.to_string(),
            language: language.to_string(),
            surface_words: words(surface),
            segmentation_words: segmentation.map(words).filter(|w| !w.is_empty()),
            gloss_words: gloss.map(words).filter(|w| !w.is_empty()),
            translation: translation.to_string(),
            metadata: Vec::new(),
        }
    }

    pub fn word_count(&self) -> usize {
        self.surface_words.len()
    }

    pub fn surface_line(&self) -> String {
        self.surface_words.join(" ")
    }

    pub fn segmentation_line(&self) -> Option<String> {
        self.segmentation_words.as_ref().map(|w| w.join(" "))
    }

    pub fn gloss_line(&self) -> Option<String> {
        self.gloss_words.as_ref().map(|w| w.join(" "))
    }

    /// Whitespace tokens of the free translation.
    pub fn translation_tokens(&self) -> Vec<&str> {
        self.translation.split_whitespace().collect()
    }
}

fn words(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_string).collect()
}

/// An ordered collection of examples sharing a language.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub examples: Vec<IgtExample>,
    pub language: String,
    pub provenance: String,
}

impl Corpus {
    pub fn new(language: &str, provenance: &str, examples: Vec<IgtExample>) -> Result<Self, IgtError> {
        let mut seen = HashSet::new();
        for ex in &examples {
            if !seen.insert(ex.id.as_str()) {
                return Err(IgtError::DuplicateId(ex.id.clone()));
            }
        }
        Ok(Corpus { examples, language: language.to_string(), provenance: provenance.to_string() })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// A corpus with the same language and provenance but different examples.
    pub fn with_examples(&self, examples: Vec<IgtExample>) -> Corpus {
        Corpus { examples, language: self.language.clone(), provenance: self.provenance.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseOptions {
    /// Language assigned to the corpus and to blocks without a `\lang` line.
    pub language: String,
    pub provenance: String,
    /// Abort on the first malformed block instead of skipping it.
    pub strict: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { language: "und".to_string(), provenance: String::new(), strict: false }
    }
}

impl ParseOptions {
    pub fn new(language: &str) -> Self {
        ParseOptions { language: language.to_string(), ..Default::default() }
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn provenance(mut self, provenance: &str) -> Self {
        self.provenance = provenance.to_string();
        self
    }
}

/// Parse result: the corpus plus the blocks skipped in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedCorpus {
    pub corpus: Corpus,
    pub skipped: Vec<IgtError>,
}

struct RawBlock<'a> {
    first_line: usize,
    lines: Vec<(usize, &'a str)>,
}

fn blocks(text: &str) -> Vec<RawBlock<'_>> {
    let mut out = Vec::new();
    let mut current: Option<RawBlock<'_>> = None;
    for (idx, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if let Some(block) = current.take() {
                out.push(block);
            }
            continue;
        }
        current.get_or_insert_with(|| RawBlock { first_line: idx + 1, lines: Vec::new() }).lines.push((idx + 1, line));
    }
    out.extend(current);
    out
}

fn parse_block(block: &RawBlock<'_>, ordinal: usize, opts: &ParseOptions) -> Result<IgtExample, IgtError> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut ex = IgtExample { id: ordinal.to_string(), language: opts.language.clone(), ..Default::default() };
    let mut has_transcription = false;
    for &(line_no, line) in &block.lines {
        let rest = line.strip_prefix('\\').ok_or(IgtError::MalformedLine { line: line_no })?;
        let (prefix, content) = match rest.split_once(' ') {
            Some((p, c)) => (p, c),
            None => (rest, ""),
        };
        if prefix.is_empty() {
            return Err(IgtError::MalformedLine { line: line_no });
        }
        if !seen.insert(prefix) {
            return Err(IgtError::DuplicatePrefix { line: line_no, prefix: prefix.to_string() });
        }
        match prefix {
            "t" => {
                ex.surface_words = words(content);
                if ex.surface_words.is_empty() {
                    return Err(IgtError::EmptyTranscription { line: line_no });
                }
                has_transcription = true;
            }
            "m" => ex.segmentation_words = Some(words(content)).filter(|w| !w.is_empty()),
            "g" => ex.gloss_words = Some(words(content)).filter(|w| !w.is_empty()),
            "l" => ex.translation = content.to_string(),
            "id" => ex.id = content.trim().to_string(),
            "lang" => ex.language = content.trim().to_string(),
            other if opts.strict => return Err(IgtError::UnknownPrefix { line: line_no, prefix: other.to_string() }),
            other => ex.metadata.push((other.to_string(), content.to_string())),
        }
    }
    if !has_transcription {
        return Err(IgtError::MissingTranscription { line: block.first_line });
    }
    Ok(ex)
}

/// Parse Toolbox-style IGT text. Empty input gives an empty corpus.
pub fn parse_corpus(text: &str, opts: &ParseOptions) -> Result<ParsedCorpus, IgtError> {
    let mut examples = Vec::new();
    let mut skipped = Vec::new();
    let mut ids = HashSet::new();
    for (ordinal, block) in blocks(text).iter().enumerate() {
        let parsed = parse_block(block, ordinal + 1, opts).and_then(|ex| {
            if ids.contains(&ex.id) {
                Err(IgtError::DuplicateId(ex.id))
            } else {
                Ok(ex)
            }
        });
        match parsed {
            Ok(ex) => {
                ids.insert(ex.id.clone());
                examples.push(ex);
            }
            Err(e) if opts.strict => return Err(e),
            Err(e) => skipped.push(e),
        }
    }
    let corpus = Corpus { examples, language: opts.language.clone(), provenance: opts.provenance.clone() };
    Ok(ParsedCorpus { corpus, skipped })
}

/// Serialize one example as a block (no trailing newline).
pub fn serialize_example(ex: &IgtExample, corpus_language: &str) -> String {
    let mut lines = vec![format!("\\id {}", ex.id)];
    if ex.language != corpus_language {
        lines.push(format!("\\lang {}", ex.language));
    }
    lines.push(format!("\\t {}", ex.surface_line()));
    if let Some(seg) = ex.segmentation_line() {
        lines.push(format!("\\m {seg}"));
    }
    if let Some(gloss) = ex.gloss_line() {
        lines.push(format!("\\g {gloss}"));
    }
    if !ex.translation.is_empty() {
        lines.push(format!("\\l {}", ex.translation));
    }
    for (key, value) in &ex.metadata {
        lines.push(format!("\\{key} {value}"));
    }
    lines.join("\n")
}

/// Blocks separated by exactly one blank line, newline-terminated; `""` for no examples.
pub fn serialize_corpus(corpus: &Corpus) -> String {
    if corpus.examples.is_empty() {
        return String::new();
    }
    let blocks: Vec<String> = corpus.examples.iter().map(|ex| serialize_example(ex, &corpus.language)).collect();
    let mut out = blocks.join("\n\n");
    out.push('\n');
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonExample {
    id: String,
    language: String,
    surface: String,
    segmentation: Option<String>,
    gloss: Option<String>,
    translation: String,
}

/// Parse the JSON mirror format (an array of example objects).
pub fn parse_json_corpus(text: &str, opts: &ParseOptions) -> Result<ParsedCorpus, IgtError> {
    if text.trim().is_empty() {
        return Ok(ParsedCorpus {
            corpus: Corpus {
                examples: Vec::new(),
                language: opts.language.clone(),
                provenance: opts.provenance.clone(),
            },
            skipped: Vec::new(),
        });
    }
    let raw: Vec<JsonExample> = serde_json::from_str(text).map_err(|e| IgtError::Json(e.to_string()))?;
    let mut examples = Vec::new();
    let mut skipped = Vec::new();
    let mut ids = HashSet::new();
    for (i, item) in raw.into_iter().enumerate() {
        let ex = IgtExample::from_lines(
            &item.id,
            &item.language,
            &item.surface,
            item.segmentation.as_deref(),
            item.gloss.as_deref(),
            &item.translation,
        );
        let check = if ex.surface_words.is_empty() {
            Err(IgtError::EmptyTranscription { line: i + 1 })
        } else if ids.contains(&ex.id) {
            Err(IgtError::DuplicateId(ex.id.clone()))
        } else {
            Ok(())
        };
        match check {
            Ok(()) => {
                ids.insert(ex.id.clone());
                examples.push(ex);
            }
            Err(e) if opts.strict => return Err(e),
            Err(e) => skipped.push(e),
        }
    }
    let corpus = Corpus { examples, language: opts.language.clone(), provenance: opts.provenance.clone() };
    Ok(ParsedCorpus { corpus, skipped })
}

/// JSON mirror: pretty-printed array with two-space indent and a trailing newline.
/// Metadata lines are not represented.
pub fn serialize_json_corpus(corpus: &Corpus) -> String {
    let items: Vec<JsonExample> = corpus
        .examples
        .iter()
        .map(|ex| JsonExample {
            id: ex.id.clone(),
            language: ex.language.clone(),
            surface: ex.surface_line(),
            segmentation: ex.segmentation_line(),
            gloss: ex.gloss_line(),
            translation: ex.translation.clone(),
        })
        .collect();
    let mut out = serde_json::to_string_pretty(&items).expect("example serialization cannot fail");
    out.push('\n');
    out
}

/// Line-count and morpheme-count agreement of one example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlignmentReport {
    /// Surface, segmentation and gloss lines (those present) have equal word counts.
    pub word_aligned: bool,
    /// Additionally the whitespace-split translation has the same count.
    pub four_line_aligned: bool,
    /// `None` unless segmentation and gloss are present and the lines are word-aligned.
    pub morpheme_aligned: Option<bool>,
    pub offending_positions: Vec<usize>,
}

pub fn check_alignment(ex: &IgtExample) -> AlignmentReport {
    let n = ex.surface_words.len();
    let seg_ok = ex.segmentation_words.as_ref().is_none_or(|s| s.len() == n);
    let gloss_ok = ex.gloss_words.as_ref().is_none_or(|g| g.len() == n);
    let word_aligned = seg_ok && gloss_ok;
    let four_line_aligned = word_aligned && ex.translation_tokens().len() == n;

    let mut offending_positions = Vec::new();
    let morpheme_aligned = match (&ex.segmentation_words, &ex.gloss_words) {
        (Some(seg), Some(gloss)) if word_aligned => {
            for (i, (s, g)) in seg.iter().zip(gloss).enumerate() {
                if split_morphemes(s).len() != split_morphemes(g).len() {
                    offending_positions.push(i);
                }
            }
            Some(offending_positions.is_empty())
        }
        _ => None,
    };
    AlignmentReport { word_aligned, four_line_aligned, morpheme_aligned, offending_positions }
}

/// Split on `-`. The stem joiner `@` is not a split point.
pub fn split_morphemes(word: &str) -> Vec<&str> {
    word.split(MORPHEME_SEP).collect()
}

/// True iff any morpheme of `gloss_word` is exactly one of `verb_tags`.
pub fn is_verb(gloss_word: &str, verb_tags: &BTreeSet<String>) -> Result<bool, IgtError> {
    if verb_tags.is_empty() {
        return Err(IgtError::EmptyVerbTags);
    }
    Ok(split_morphemes(gloss_word).iter().any(|m| verb_tags.contains(*m)))
}

/// Segmentation word with the morpheme delimiters removed.
///
/// This is not necessarily the attested surface spelling (`juntiir` vs `juntir`).
pub fn reconstruct_surface(segmentation_word: &str) -> String {
    segmentation_word.chars().filter(|&c| c != MORPHEME_SEP).collect()
}
