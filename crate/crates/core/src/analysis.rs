//! Result tables: baseline deltas, marginal effects and best combinations.
//!
//! Results CSV columns: `task,language,combination,train_size,seed,split,chrf`.
//! `combination` is a `+`-joined list of strategy names (empty for the
//! baseline); `train_size` is a positive integer or `full`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::prep::{Task, TrainSize};
use crate::strategies::{enumerate_combinations, AugmentError, Combination, StrategyName};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("results CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("results CSV is missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("row {row}: {source}")]
    Strategy { row: usize, source: AugmentError },
    #[error("duplicate record for {0}")]
    DuplicateKey(String),
    #[error("no baseline record for {0}")]
    MissingBaseline(String),
    #[error("no records for {0}")]
    NoRecords(String),
    #[error("strategy {strategy} is not part of the {language} lattice")]
    StrategyNotInLattice { strategy: StrategyName, language: String },
    #[error("incomplete lattice: missing {0}")]
    IncompleteLattice(String),
    #[error("asked for the top {requested} combinations but only {available} exist")]
    TooMany { requested: usize, available: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Eval,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Eval => "eval",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "eval" => Ok(Split::Eval),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?} (expected eval or test)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub task: Task,
    pub language: String,
    pub combination: Combination,
    pub train_size: TrainSize,
    pub seed: u64,
    pub split: Split,
    pub chrf: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct RecordKey {
    task: Task,
    language: String,
    combination: String,
    train_size: TrainSize,
    seed: u64,
    split: Split,
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "task={} language={} combination={:?} size={} seed={} split={}",
            self.task, self.language, self.combination, self.train_size, self.seed, self.split
        )
    }
}

impl ExperimentRecord {
    fn key(&self) -> RecordKey {
        RecordKey {
            task: self.task,
            language: self.language.clone(),
            combination: self.combination.label(),
            train_size: self.train_size,
            seed: self.seed,
            split: self.split,
        }
    }
}

/// Validated results with unique `(task, language, combination, size, seed, split)` keys.
#[derive(Debug, Clone, Default)]
pub struct ResultsTable {
    records: Vec<ExperimentRecord>,
    index: HashMap<RecordKey, usize>,
}

impl ResultsTable {
    pub fn new(records: Vec<ExperimentRecord>) -> Result<Self, AnalysisError> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if !(0.0..=100.0).contains(&r.chrf) {
                return Err(AnalysisError::Row { row: i + 1, message: format!("chrF {} outside [0, 100]", r.chrf) });
            }
            if index.insert(r.key(), i).is_some() {
                return Err(AnalysisError::DuplicateKey(r.key().to_string()));
            }
        }
        Ok(ResultsTable { records, index })
    }

    pub fn records(&self) -> &[ExperimentRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn get(&self, key: &RecordKey) -> Option<f64> {
        self.index.get(key).map(|&i| self.records[i].chrf)
    }

    fn select<'a>(
        &'a self,
        task: Task,
        language: &'a str,
        split: Split,
    ) -> impl Iterator<Item = &'a ExperimentRecord> + 'a {
        self.records.iter().filter(move |r| r.task == task && r.language == language && r.split == split)
    }

    /// Write back in the ingest format, in record order.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(COLUMNS).expect("in-memory write");
        for r in &self.records {
            w.write_record([
                r.task.as_str(),
                &r.language,
                &r.combination.label(),
                &r.train_size.to_string(),
                &r.seed.to_string(),
                r.split.as_str(),
                &r.chrf.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
    }
}

const COLUMNS: [&str; 7] = ["task", "language", "combination", "train_size", "seed", "split", "chrf"];

/// Parse and validate a results CSV.
pub fn ingest_results(text: &str) -> Result<ResultsTable, AnalysisError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let mut col = [0usize; 7];
    for (slot, name) in col.iter_mut().zip(COLUMNS) {
        *slot = headers.iter().position(|h| h == name).ok_or(AnalysisError::MissingColumn(name))?;
    }
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let field = |c: usize| row.get(col[c]).unwrap_or("");
        let bad = |message: String| AnalysisError::Row { row: row_no, message };
        let task: Task = field(0).parse().map_err(|e| bad(format!("{e}")))?;
        let language = field(1).to_string();
        if language.is_empty() {
            return Err(bad("empty language".into()));
        }
        let combination = Combination::parse(&language, field(2))
            .map_err(|source| AnalysisError::Strategy { row: row_no, source })?;
        let train_size: TrainSize = field(3).parse().map_err(|e| bad(format!("{e}")))?;
        let seed: u64 = field(4).parse().map_err(|_| bad(format!("invalid seed {:?}", field(4))))?;
        let split: Split = field(5).parse().map_err(bad)?;
        let chrf: f64 = field(6).parse().map_err(|_| bad(format!("invalid chrF {:?}", field(6))))?;
        if !(0.0..=100.0).contains(&chrf) {
            return Err(bad(format!("chrF {chrf} outside [0, 100]")));
        }
        records.push(ExperimentRecord { task, language, combination, train_size, seed, split, chrf });
    }
    ResultsTable::new(records)
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Summary {
    /// Values are sorted before summation so the result does not depend on input order.
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() > 1 {
            let mut sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
            sq.sort_by(f64::total_cmp);
            (sq.iter().sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Summary { mean, std, count: v.len() })
    }

    /// `mean (std)` with two decimals, e.g. `-0.83 (1.99)`.
    pub fn formatted(&self) -> String {
        format!("{} ({})", two_decimals(self.mean), two_decimals(self.std))
    }
}

fn two_decimals(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Per-seed `chrF(combination) - chrF(baseline)` at one train size.
pub fn baseline_delta(
    table: &ResultsTable,
    combination: &Combination,
    task: Task,
    train_size: TrainSize,
    split: Split,
) -> Result<Summary, AnalysisError> {
    let language = &combination.language;
    let mut deltas = Vec::new();
    for r in table.select(task, language, split) {
        if r.combination != *combination || r.train_size != train_size {
            continue;
        }
        let key = RecordKey { combination: String::new(), ..r.key() };
        let base = table.get(&key).ok_or_else(|| AnalysisError::MissingBaseline(key.to_string()))?;
        deltas.push(r.chrf - base);
    }
    Summary::of(&deltas).ok_or_else(|| {
        AnalysisError::NoRecords(format!(
            "task={task} language={language} combination={:?} size={train_size} split={split}",
            combination.label()
        ))
    })
}

/// Strategies forming the lattice for a language: its fixed set, or the
/// strategies observed in the table for languages without one.
pub fn lattice_strategies(table: &ResultsTable, task: Task, language: &str, split: Split) -> Vec<StrategyName> {
    match StrategyName::for_language(language) {
        Some(set) => set.to_vec(),
        None => {
            let seen: BTreeSet<StrategyName> =
                table.select(task, language, split).flat_map(|r| r.combination.strategies.iter().copied()).collect();
            seen.into_iter().collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalEffect {
    pub strategy: StrategyName,
    pub summary: Summary,
    /// Number of combinations without the strategy that were paired.
    pub combination_pairs: usize,
}

/// Mean paired difference `chrF(C + S) - chrF(C)` over every combination `C`
/// without `S`, every train size and every seed.
pub fn marginal_effect(
    table: &ResultsTable,
    strategy: StrategyName,
    task: Task,
    language: &str,
    split: Split,
) -> Result<MarginalEffect, AnalysisError> {
    let lattice = lattice_strategies(table, task, language, split);
    if !lattice.contains(&strategy) {
        return Err(AnalysisError::StrategyNotInLattice { strategy, language: language.into() });
    }
    let others: Vec<StrategyName> = lattice.iter().copied().filter(|s| *s != strategy).collect();
    let without =
        enumerate_combinations(&others, language).map_err(|source| AnalysisError::Strategy { row: 0, source })?;

    let mut by_combo: BTreeMap<String, Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in table.select(task, language, split) {
        by_combo.entry(r.combination.label()).or_default().push(r);
    }

    let mut diffs = Vec::new();
    for combo in &without {
        let records = by_combo.get(&combo.label()).ok_or_else(|| {
            AnalysisError::IncompleteLattice(format!(
                "records for combination {:?} ({task}, {language}, {split})",
                combo.label()
            ))
        })?;
        let with = combo.with(strategy).label();
        for r in records {
            let key = RecordKey { combination: with.clone(), ..r.key() };
            let paired = table.get(&key).ok_or_else(|| AnalysisError::IncompleteLattice(key.to_string()))?;
            diffs.push(paired - r.chrf);
        }
    }
    let summary = Summary::of(&diffs).ok_or_else(|| AnalysisError::NoRecords(format!("{task} {language} {split}")))?;
    Ok(MarginalEffect { strategy, summary, combination_pairs: without.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedCombination {
    pub combination: String,
    pub strategies: usize,
    pub mean_eval: f64,
    pub eval_runs: usize,
    /// Test-split delta against the baseline for each train size with test records.
    pub test_deltas: Vec<(TrainSize, Option<Summary>)>,
}

/// Rank combinations by mean eval-split chrF across sizes and seeds and keep the top `k`.
///
/// Ties go to the combination with fewer strategies, then to the earlier
/// one in canonical strategy order.
pub fn best_combinations(
    table: &ResultsTable,
    task: Task,
    language: &str,
    k: usize,
) -> Result<Vec<RankedCombination>, AnalysisError> {
    let mut eval: BTreeMap<Combination, Vec<f64>> = BTreeMap::new();
    for r in table.select(task, language, Split::Eval) {
        eval.entry(r.combination.clone()).or_default().push(r.chrf);
    }
    if k > eval.len() {
        return Err(AnalysisError::TooMany { requested: k, available: eval.len() });
    }
    let mut ranked: Vec<(Combination, Summary)> =
        eval.into_iter().map(|(c, v)| (c, Summary::of(&v).expect("groups are non-empty"))).collect();
    ranked.sort_by(|(ca, a), (cb, b)| b.mean.total_cmp(&a.mean).then_with(|| ca.lattice_cmp(cb)));
    ranked.truncate(k);

    let sizes: BTreeSet<TrainSize> = table.select(task, language, Split::Test).map(|r| r.train_size).collect();
    Ok(ranked
        .into_iter()
        .map(|(combo, summary)| RankedCombination {
            combination: combo.label(),
            strategies: combo.len(),
            mean_eval: summary.mean,
            eval_runs: summary.count,
            test_deltas: sizes
                .iter()
                .map(|&size| (size, baseline_delta(table, &combo, task, size, Split::Test).ok()))
                .collect(),
        })
        .collect())
}

/// Which tables to put in a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    /// Single-strategy test deltas per train size.
    BaselineDeltas,
    MarginalEffects,
    BestCombinations(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportTable {
    /// File stem for the CSV export.
    pub name: String,
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ReportTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("### {}\n\n| {} |\n|", self.title, self.header.join(" | "));
        for _ in &self.header {
            out.push_str("---|");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("| {} |\n", row.join(" | ")));
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub tables: Vec<ReportTable>,
}

impl Report {
    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn to_markdown(&self) -> String {
        self.tables.iter().map(ReportTable::to_markdown).collect::<Vec<_>>().join("\n")
    }
}

fn cell(summary: Option<Summary>) -> String {
    summary.map(|s| s.formatted()).unwrap_or_default()
}

/// Build the selected tables for one task and language.
pub fn emit_report(
    table: &ResultsTable,
    task: Task,
    language: &str,
    selection: &[Analysis],
) -> Result<Report, AnalysisError> {
    let mut report = Report::default();
    for analysis in selection {
        let t = match *analysis {
            Analysis::BaselineDeltas => {
                let sizes: BTreeSet<TrainSize> =
                    table.select(task, language, Split::Test).map(|r| r.train_size).collect();
                let singles: BTreeSet<Combination> = table
                    .select(task, language, Split::Test)
                    .filter(|r| r.combination.len() == 1)
                    .map(|r| r.combination.clone())
                    .collect();
                let mut header = vec!["strategy".to_string()];
                header.extend(sizes.iter().map(TrainSize::to_string));
                let rows = singles
                    .iter()
                    .map(|c| {
                        let mut row = vec![c.label()];
                        row.extend(sizes.iter().map(|&s| cell(baseline_delta(table, c, task, s, Split::Test).ok())));
                        row
                    })
                    .collect();
                ReportTable {
                    name: format!("baseline_deltas_{language}_{task}"),
                    title: format!("Test chrF difference from baseline ({language}, {task})"),
                    header,
                    rows,
                }
            }
            Analysis::MarginalEffects => {
                let rows = lattice_strategies(table, task, language, Split::Test)
                    .into_iter()
                    .map(|s| {
                        marginal_effect(table, s, task, language, Split::Test)
                            .map(|e| vec![s.to_string(), e.summary.formatted()])
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                ReportTable {
                    name: format!("marginal_effects_{language}_{task}"),
                    title: format!("Marginal effect of each strategy ({language}, {task})"),
                    header: vec!["strategy".into(), "effect".into()],
                    rows,
                }
            }
            Analysis::BestCombinations(k) => {
                let ranked = best_combinations(table, task, language, k)?;
                let sizes: Vec<TrainSize> =
                    ranked.first().map(|r| r.test_deltas.iter().map(|(s, _)| *s).collect()).unwrap_or_default();
                let mut header = vec!["rank".to_string(), "combination".into(), "mean_eval".into()];
                header.extend(sizes.iter().map(TrainSize::to_string));
                let rows = ranked
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        let label =
                            if r.combination.is_empty() { "baseline".to_string() } else { r.combination.clone() };
                        let mut row = vec![(i + 1).to_string(), label, two_decimals(r.mean_eval)];
                        row.extend(r.test_deltas.iter().map(|(_, s)| cell(*s)));
                        row
                    })
                    .collect();
                ReportTable {
                    name: format!("best_combinations_{language}_{task}"),
                    title: format!("Top {k} combinations by eval chrF ({language}, {task})"),
                    header,
                    rows,
                }
            }
        };
        report.tables.push(t);
    }
    Ok(report)
}
