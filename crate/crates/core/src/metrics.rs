//! Character n-gram F-score (chrF) and its word-internal variant.
//!
//! Precision and recall are computed per n-gram order from clipped multiset
//! matches, averaged over the orders where both sides have at least one
//! n-gram, and combined into F-beta. Whitespace is removed before n-gram
//! extraction in [`BoundaryMode::Crossing`]; [`BoundaryMode::WordInternal`]
//! extracts n-grams inside each word only, which makes the score blind to
//! word order.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("max_n must be at least 1")]
    InvalidOrder,
    #[error("beta must be positive, got {0}")]
    InvalidBeta(f64),
    #[error("corpus has no sentence pairs")]
    EmptyCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Strip whitespace, then take n-grams of the concatenation.
    Crossing,
    /// N-grams inside each whitespace-delimited word.
    WordInternal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChrfConfig {
    max_n: usize,
    beta: f64,
    boundary_mode: BoundaryMode,
}

impl Default for ChrfConfig {
    fn default() -> Self {
        ChrfConfig { max_n: 6, beta: 2.0, boundary_mode: BoundaryMode::Crossing }
    }
}

impl ChrfConfig {
    pub fn new(max_n: usize, beta: f64, boundary_mode: BoundaryMode) -> Result<Self, MetricError> {
        if max_n == 0 {
            return Err(MetricError::InvalidOrder);
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(MetricError::InvalidBeta(beta));
        }
        Ok(ChrfConfig { max_n, beta, boundary_mode })
    }

    /// Defaults with word-internal n-grams.
    pub fn modified() -> Self {
        ChrfConfig { boundary_mode: BoundaryMode::WordInternal, ..Default::default() }
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn boundary_mode(&self) -> BoundaryMode {
        self.boundary_mode
    }

    pub fn with_boundary_mode(mut self, mode: BoundaryMode) -> Self {
        self.boundary_mode = mode;
        self
    }
}

/// Counts for one n-gram order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct OrderStats {
    pub n: usize,
    pub hypothesis: u64,
    pub reference: u64,
    pub matched: u64,
    /// `matched / hypothesis`, or 0 when the hypothesis has no n-grams.
    pub precision: f64,
    /// `matched / reference`, or 0 when the reference has no n-grams.
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChrfScore {
    /// In `[0, 100]`.
    pub score: f64,
    pub per_n: Vec<OrderStats>,
}

/// Summable n-gram statistics; corpus scores add these before scoring.
///
/// A segment's hypothesis count for an order is recorded as 0 when the
/// reference has no n-grams of that order, so such orders add nothing to
/// the corpus precision denominator.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NgramStats {
    /// `(hypothesis, reference, matched)` per order, index 0 = unigrams.
    pub orders: Vec<(u64, u64, u64)>,
    /// Hypothesis n-grams left out because the reference had none of that order.
    pub unreferenced: u64,
}

impl NgramStats {
    fn zeros(max_n: usize) -> Self {
        NgramStats { orders: vec![(0, 0, 0); max_n], unreferenced: 0 }
    }

    pub fn add(&mut self, other: &NgramStats) {
        for (a, b) in self.orders.iter_mut().zip(&other.orders) {
            a.0 += b.0;
            a.1 += b.1;
            a.2 += b.2;
        }
        self.unreferenced += other.unreferenced;
    }

    fn is_empty(&self) -> bool {
        self.unreferenced == 0 && self.orders.iter().all(|&(h, r, _)| h == 0 && r == 0)
    }
}

fn units(text: &str, mode: BoundaryMode) -> Vec<Vec<char>> {
    match mode {
        BoundaryMode::Crossing => vec![text.split_whitespace().flat_map(str::chars).collect()],
        BoundaryMode::WordInternal => text.split_whitespace().map(|w| w.chars().collect()).collect(),
    }
}

fn count_ngrams(units: &[Vec<char>], n: usize) -> HashMap<&[char], u64> {
    let mut counts = HashMap::new();
    for unit in units {
        if unit.len() >= n {
            for gram in unit.windows(n) {
                *counts.entry(gram).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Character n-grams of order `n` as a multiset.
pub fn char_ngrams(text: &str, n: usize, mode: BoundaryMode) -> HashMap<String, u64> {
    assert!(n >= 1, "n-gram order must be at least 1");
    let units = units(text, mode);
    count_ngrams(&units, n).into_iter().map(|(g, c)| (g.iter().collect(), c)).collect()
}

/// Per-order counts for one sentence pair.
pub fn segment_statistics(hypothesis: &str, reference: &str, config: &ChrfConfig) -> NgramStats {
    let hyp_units = units(hypothesis, config.boundary_mode);
    let ref_units = units(reference, config.boundary_mode);
    let mut stats = NgramStats::zeros(config.max_n);
    for (i, slot) in stats.orders.iter_mut().enumerate() {
        let hyp = count_ngrams(&hyp_units, i + 1);
        let refs = count_ngrams(&ref_units, i + 1);
        let matched = hyp.iter().map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0))).sum();
        let hyp_total: u64 = hyp.values().sum();
        let ref_total: u64 = refs.values().sum();
        if ref_total == 0 {
            stats.unreferenced += hyp_total;
            *slot = (0, 0, 0);
        } else {
            *slot = (hyp_total, ref_total, matched);
        }
    }
    stats
}

/// Score summed statistics. Both sides empty counts as a perfect match.
pub fn score_statistics(stats: &NgramStats, config: &ChrfConfig) -> ChrfScore {
    let mut per_n = Vec::with_capacity(stats.orders.len());
    let (mut avg_p, mut avg_r, mut effective) = (0.0, 0.0, 0usize);
    for (i, &(hyp, reference, matched)) in stats.orders.iter().enumerate() {
        let precision = if hyp > 0 { matched as f64 / hyp as f64 } else { 0.0 };
        let recall = if reference > 0 { matched as f64 / reference as f64 } else { 0.0 };
        if hyp > 0 && reference > 0 {
            avg_p += precision;
            avg_r += recall;
            effective += 1;
        }
        per_n.push(OrderStats { n: i + 1, hypothesis: hyp, reference, matched, precision, recall });
    }
    let score = if stats.is_empty() {
        100.0
    } else if effective == 0 {
        0.0
    } else {
        avg_p /= effective as f64;
        avg_r /= effective as f64;
        let factor = config.beta * config.beta;
        if avg_p + avg_r > 0.0 {
            100.0 * (1.0 + factor) * avg_p * avg_r / (factor * avg_p + avg_r)
        } else {
            0.0
        }
    };
    ChrfScore { score: score.clamp(0.0, 100.0), per_n }
}

/// Sentence-level chrF.
pub fn chrf(hypothesis: &str, reference: &str, config: &ChrfConfig) -> ChrfScore {
    score_statistics(&segment_statistics(hypothesis, reference, config), config)
}

/// chrF over n-grams that stay inside a word; insensitive to word order.
pub fn modified_chrf(hypothesis: &str, reference: &str, config: &ChrfConfig) -> ChrfScore {
    chrf(hypothesis, reference, &config.with_boundary_mode(BoundaryMode::WordInternal))
}

/// Corpus chrF with micro aggregation: statistics are summed over all pairs before scoring.
pub fn chrf_corpus<S: AsRef<str> + Sync>(
    pairs: &[(S, S)],
    config: &ChrfConfig,
    execution: Execution,
) -> Result<ChrfScore, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let per_pair = execution.map(pairs, |(h, r)| segment_statistics(h.as_ref(), r.as_ref(), config));
    let mut total = NgramStats::zeros(config.max_n);
    for s in &per_pair {
        total.add(s);
    }
    Ok(score_statistics(&total, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grams(text: &str, n: usize, mode: BoundaryMode) -> Vec<(String, u64)> {
        let mut v: Vec<_> = char_ngrams(text, n, mode).into_iter().collect();
        v.sort();
        v
    }

    #[test]
    fn ngram_modes() {
        assert_eq!(grams("ab c", 2, BoundaryMode::Crossing), vec![("ab".into(), 1), ("bc".into(), 1)]);
        assert_eq!(grams("ab c", 2, BoundaryMode::WordInternal), vec![("ab".into(), 1)]);
        assert!(grams("xy", 3, BoundaryMode::Crossing).is_empty());
        assert!(grams("xy", 3, BoundaryMode::WordInternal).is_empty());
        assert_eq!(grams("aaa", 2, BoundaryMode::Crossing), vec![("aa".into(), 2)]);
    }

    #[test]
    fn edge_scores() {
        let cfg = ChrfConfig::default();
        assert_eq!(chrf("abc", "abc", &cfg).score, 100.0);
        assert_eq!(chrf("", "abc", &cfg).score, 0.0);
        assert_eq!(chrf("", "", &cfg).score, 100.0);
        assert_eq!(chrf("abc", "", &cfg).score, 0.0);
        assert_eq!(chrf("abc", "xyz", &cfg).score, 0.0);
    }

    #[test]
    fn modified_ignores_order() {
        let cfg = ChrfConfig::default();
        assert_eq!(modified_chrf("sat cat", "cat sat", &cfg).score, 100.0);
        assert_eq!(modified_chrf("cat sat", "cat sat", &cfg).score, 100.0);
        assert!(chrf("sat cat", "cat sat", &cfg).score < 100.0);
    }

    #[test]
    fn config_validation() {
        assert_eq!(ChrfConfig::new(0, 2.0, BoundaryMode::Crossing), Err(MetricError::InvalidOrder));
        assert!(matches!(ChrfConfig::new(6, 0.0, BoundaryMode::Crossing), Err(MetricError::InvalidBeta(_))));
        assert!(ChrfConfig::new(6, f64::NAN, BoundaryMode::Crossing).is_err());
    }

    #[test]
    fn corpus_edge_cases() {
        let cfg = ChrfConfig::default();
        let empty: [(&str, &str); 0] = [];
        assert_eq!(chrf_corpus(&empty, &cfg, Execution::Sequential), Err(MetricError::EmptyCorpus));
        let single = [("cat sat on", "the cat sat")];
        assert_eq!(
            chrf_corpus(&single, &cfg, Execution::Parallel).unwrap().score,
            chrf("cat sat on", "the cat sat", &cfg).score
        );
        let same = [("a b", "a b"), ("xyz", "xyz")];
        assert_eq!(chrf_corpus(&same, &cfg, Execution::Sequential).unwrap().score, 100.0);
    }

    #[test]
    fn short_strings_use_effective_orders() {
        // only unigrams and bigrams exist on both sides; orders 3..6 are skipped
        let s = chrf("ab", "ab", &ChrfConfig::default());
        assert_eq!(s.score, 100.0);
        assert_eq!(s.per_n[2].hypothesis, 0);
    }

    proptest! {
        #[test]
        fn scores_are_bounded(h in "[abc ]{0,12}", r in "[abc ]{0,12}") {
            for cfg in [ChrfConfig::default(), ChrfConfig::modified()] {
                let s = chrf(&h, &r, &cfg).score;
                prop_assert!((0.0..=100.0).contains(&s));
            }
        }

        #[test]
        fn single_words_agree(h in "[a-d]{1,8}", r in "[a-d]{1,8}") {
            let cfg = ChrfConfig::default();
            prop_assert_eq!(chrf(&h, &r, &cfg).score, modified_chrf(&h, &r, &cfg).score);
        }
    }
}
