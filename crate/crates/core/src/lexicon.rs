//! Insertion word lists and the Spanish conjugation table.
//!
//! All inputs are UTF-8 TSV without a header row. Blank lines and lines
//! starting with `#` are ignored.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexiconError {
    #[error("line {line}: expected {expected} tab-separated columns, found {found}")]
    ColumnCount { line: usize, expected: usize, found: usize },
    #[error("line {line}: duplicate form {form:?}")]
    DuplicateForm { line: usize, form: String },
    #[error("empty insertion list")]
    EmptyList,
    #[error("line {line}: {field} must not contain whitespace: {value:?}")]
    Whitespace { line: usize, field: &'static str, value: String },
    #[error("line {line}: unknown tense {value:?} (expected present or preterite)")]
    UnknownTense { line: usize, value: String },
    #[error("line {line}: form {form:?} is already mapped to {existing}")]
    AmbiguousForm { line: usize, form: String, existing: String },
}

/// A target-language word with its gloss label and translation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexEntry {
    pub form: String,
    pub gloss_label: String,
    pub translation: String,
}

impl LexEntry {
    pub fn new(form: &str, gloss_label: &str, translation: &str) -> Self {
        LexEntry { form: form.into(), gloss_label: gloss_label.into(), translation: translation.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InsertionList {
    pub name: String,
    pub entries: Vec<LexEntry>,
}

/// Size of the reference conjunction, noise and interjection lists.
pub const REFERENCE_LIST_SIZE: usize = 20;

impl InsertionList {
    pub fn new(name: &str, entries: Vec<LexEntry>) -> Result<Self, LexiconError> {
        if entries.is_empty() {
            return Err(LexiconError::EmptyList);
        }
        let mut seen = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            if !seen.insert(e.form.as_str()) {
                return Err(LexiconError::DuplicateForm { line: i + 1, form: e.form.clone() });
            }
        }
        Ok(InsertionList { name: name.into(), entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_reference_size(&self) -> bool {
        self.entries.len() == REFERENCE_LIST_SIZE
    }
}

fn data_lines(tsv: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    tsv.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split('\t').collect()))
        }
    })
}

fn no_whitespace(line: usize, field: &'static str, value: &str) -> Result<(), LexiconError> {
    if value.is_empty() || value.chars().any(char::is_whitespace) {
        return Err(LexiconError::Whitespace { line, field, value: value.into() });
    }
    Ok(())
}

/// Load a `form \t gloss_label \t translation` list.
pub fn load_word_list(name: &str, tsv: &str) -> Result<InsertionList, LexiconError> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (line, cols) in data_lines(tsv) {
        if cols.len() != 3 {
            return Err(LexiconError::ColumnCount { line, expected: 3, found: cols.len() });
        }
        no_whitespace(line, "form", cols[0])?;
        no_whitespace(line, "gloss label", cols[1])?;
        if !seen.insert(cols[0].to_string()) {
            return Err(LexiconError::DuplicateForm { line, form: cols[0].into() });
        }
        entries.push(LexEntry::new(cols[0], cols[1], cols[2].trim()));
    }
    InsertionList::new(name, entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tense {
    Present,
    Preterite,
}

impl Tense {
    pub fn as_str(self) -> &'static str {
        match self {
            Tense::Present => "present",
            Tense::Preterite => "preterite",
        }
    }
}

impl fmt::Display for Tense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tense {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "present" => Ok(Tense::Present),
            "preterite" => Ok(Tense::Preterite),
            _ => Err(()),
        }
    }
}

/// A paradigm cell: lemma, tense and person-number label such as `3pl`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub lemma: String,
    pub tense: Tense,
    pub person_number: String,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.lemma, self.tense, self.person_number)
    }
}

/// Bidirectional map between inflected forms and paradigm slots.
///
/// Forms are stored lowercase. When a form is listed for two slots the
/// first row wins in `by_form`, but the later slot still records the form
/// in `by_slot` (so e.g. `fue` serves both `ir` and `ser`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConjugationTable {
    by_form: BTreeMap<String, Slot>,
    by_slot: BTreeMap<Slot, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetenseDirection {
    PresentToPreterite,
    PreteriteToPresent,
}

impl RetenseDirection {
    pub fn source(self) -> Tense {
        match self {
            RetenseDirection::PresentToPreterite => Tense::Present,
            RetenseDirection::PreteriteToPresent => Tense::Preterite,
        }
    }

    pub fn target(self) -> Tense {
        match self {
            RetenseDirection::PresentToPreterite => Tense::Preterite,
            RetenseDirection::PreteriteToPresent => Tense::Present,
        }
    }
}

impl ConjugationTable {
    pub fn by_form(&self, form: &str) -> Option<&Slot> {
        self.by_form.get(&form.to_lowercase())
    }

    pub fn by_slot(&self, lemma: &str, tense: Tense, person_number: &str) -> Option<&str> {
        let slot = Slot { lemma: lemma.into(), tense, person_number: person_number.into() };
        self.by_slot.get(&slot).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.by_form.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_form.is_empty()
    }

    pub fn forms(&self) -> impl Iterator<Item = (&str, &Slot)> {
        self.by_form.iter().map(|(f, s)| (f.as_str(), s))
    }

    fn insert(&mut self, line: usize, form: &str, slot: Slot, strict: bool) -> Result<(), LexiconError> {
        let form = form.to_lowercase();
        if let Some(existing) = self.by_form.get(&form) {
            if existing != &slot && strict {
                return Err(LexiconError::AmbiguousForm { line, form, existing: existing.to_string() });
            }
        }
        if let Some(existing) = self.by_slot.get(&slot) {
            if existing != &form && strict {
                return Err(LexiconError::DuplicateForm { line, form });
            }
        }
        self.by_form.entry(form.clone()).or_insert_with(|| slot.clone());
        self.by_slot.entry(slot).or_insert(form);
        Ok(())
    }

    /// Serialize as TSV rows ordered by slot.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# form\tlemma\ttense\tperson-number\n");
        for (slot, form) in &self.by_slot {
            out.push_str(&format!("{form}\t{}\t{}\t{}\n", slot.lemma, slot.tense, slot.person_number));
        }
        out
    }

    /// Built-in table of ~50 frequent Spanish verbs in present and preterite.
    pub fn starter() -> Self {
        let mut table = ConjugationTable::default();
        let mut add = |lemma: &str, tense: Tense, forms: [&str; 6]| {
            for (pn, form) in PERSON_NUMBERS.iter().zip(forms) {
                let slot = Slot { lemma: lemma.into(), tense, person_number: (*pn).into() };
                table.insert(0, form, slot, false).expect("lenient insert cannot fail");
            }
        };
        for (lemma, present, preterite) in IRREGULAR {
            add(lemma, Tense::Present, *present);
            add(lemma, Tense::Preterite, *preterite);
        }
        for lemma in REGULAR {
            let (stem, class) = lemma.split_at(lemma.len() - 2);
            let (present, preterite) = match class {
                "ar" => (["o", "as", "a", "amos", "áis", "an"], ["é", "aste", "ó", "amos", "asteis", "aron"]),
                "er" => (["o", "es", "e", "emos", "éis", "en"], ["í", "iste", "ió", "imos", "isteis", "ieron"]),
                _ => (["o", "es", "e", "imos", "ís", "en"], ["í", "iste", "ió", "imos", "isteis", "ieron"]),
            };
            let present = present.map(|e| format!("{stem}{e}"));
            let preterite = preterite.map(|e| format!("{stem}{e}"));
            add(lemma, Tense::Present, present.each_ref().map(String::as_str));
            add(lemma, Tense::Preterite, preterite.each_ref().map(String::as_str));
        }
        table
    }
}

const PERSON_NUMBERS: [&str; 6] = ["1sg", "2sg", "3sg", "1pl", "2pl", "3pl"];

type Paradigm = (&'static str, [&'static str; 6], [&'static str; 6]);

const IRREGULAR: &[Paradigm] = &[
    (
        "tener",
        ["tengo", "tienes", "tiene", "tenemos", "tenéis", "tienen"],
        ["tuve", "tuviste", "tuvo", "tuvimos", "tuvisteis", "tuvieron"],
    ),
    (
        "hacer",
        ["hago", "haces", "hace", "hacemos", "hacéis", "hacen"],
        ["hice", "hiciste", "hizo", "hicimos", "hicisteis", "hicieron"],
    ),
    ("ir", ["voy", "vas", "va", "vamos", "vais", "van"], ["fui", "fuiste", "fue", "fuimos", "fuisteis", "fueron"]),
    ("ser", ["soy", "eres", "es", "somos", "sois", "son"], ["fui", "fuiste", "fue", "fuimos", "fuisteis", "fueron"]),
    (
        "estar",
        ["estoy", "estás", "está", "estamos", "estáis", "están"],
        ["estuve", "estuviste", "estuvo", "estuvimos", "estuvisteis", "estuvieron"],
    ),
    (
        "poder",
        ["puedo", "puedes", "puede", "podemos", "podéis", "pueden"],
        ["pude", "pudiste", "pudo", "pudimos", "pudisteis", "pudieron"],
    ),
    (
        "decir",
        ["digo", "dices", "dice", "decimos", "decís", "dicen"],
        ["dije", "dijiste", "dijo", "dijimos", "dijisteis", "dijeron"],
    ),
    (
        "venir",
        ["vengo", "vienes", "viene", "venimos", "venís", "vienen"],
        ["vine", "viniste", "vino", "vinimos", "vinisteis", "vinieron"],
    ),
];

// Only verbs without stem or spelling changes in either tense.
const REGULAR: &[&str] = &[
    "hablar",
    "trabajar",
    "caminar",
    "llamar",
    "llevar",
    "tomar",
    "dejar",
    "pasar",
    "mirar",
    "esperar",
    "entrar",
    "necesitar",
    "usar",
    "ayudar",
    "terminar",
    "cocinar",
    "comprar",
    "lavar",
    "bailar",
    "cantar",
    "escuchar",
    "preparar",
    "ganar",
    "cambiar",
    "estudiar",
    "visitar",
    "comer",
    "beber",
    "vender",
    "aprender",
    "correr",
    "comprender",
    "deber",
    "meter",
    "responder",
    "romper",
    "vivir",
    "escribir",
    "abrir",
    "subir",
    "recibir",
    "decidir",
    "partir",
    "permitir",
    "cubrir",
    "sufrir",
];

/// Load a `form \t lemma \t tense \t person-number` table.
pub fn load_conjugation_table(tsv: &str, strict: bool) -> Result<ConjugationTable, LexiconError> {
    let mut table = ConjugationTable::default();
    for (line, cols) in data_lines(tsv) {
        if cols.len() != 4 {
            return Err(LexiconError::ColumnCount { line, expected: 4, found: cols.len() });
        }
        no_whitespace(line, "form", cols[0])?;
        let tense = cols[2].parse::<Tense>().map_err(|_| LexiconError::UnknownTense { line, value: cols[2].into() })?;
        let slot = Slot { lemma: cols[1].into(), tense, person_number: cols[3].into() };
        table.insert(line, cols[0], slot, strict)?;
    }
    Ok(table)
}

/// Swap the tense of the first verb token found in the table.
///
/// Returns `None` when no token has the source tense or the target slot is missing.
pub fn retense_translation(translation: &str, direction: RetenseDirection, table: &ConjugationTable) -> Option<String> {
    let tokens: Vec<&str> = translation.split_whitespace().collect();
    let (pos, slot) = tokens
        .iter()
        .enumerate()
        .find_map(|(i, tok)| table.by_form(tok).filter(|s| s.tense == direction.source()).map(|s| (i, s)))?;
    let replacement = table.by_slot(&slot.lemma, direction.target(), &slot.person_number)?;
    let mut out: Vec<&str> = tokens;
    out[pos] = replacement;
    Some(out.join(" "))
}
