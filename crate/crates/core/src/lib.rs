//! Deterministic tooling for interlinear glossed text (IGT) corpora.
//!
//! The crate covers the whole offline side of an augmentation study:
//!
//! * [`igt`] parses and serializes Toolbox-style IGT blocks and checks line alignment.
//! * [`lexicon`] loads insertion word lists and a Spanish conjugation table.
//! * [`strategies`] implements the augmentation strategies and the seeded
//!   pipeline that applies a combination of them to a corpus.
//! * [`metrics`] computes chrF and its word-order-insensitive variant.
//! * [`analysis`] ingests result tables and computes baseline deltas,
//!   marginal effects over the combination lattice and rankings.
//! * [`prep`] builds eval splits, size subsamples, prompt files and
//!   two-phase curriculum manifests.
//! * [`pipeline`] chains everything into one reproducible batch run.
//!
//! Every random choice is drawn from a substream keyed by a stable hash of
//! `(seed, purpose, item)`, see [`rng`]. Results therefore do not depend on
//! thread scheduling, which is what lets [`exec::Execution::Parallel`] and
//! [`exec::Execution::Sequential`] produce identical output.

pub mod analysis;
pub mod exec;
pub mod igt;
pub mod lexicon;
pub mod metrics;
pub mod pipeline;
pub mod prep;
pub mod rng;
pub mod strategies;

pub use exec::Execution;
pub use igt::{AlignmentReport, Corpus, IgtExample};
pub use lexicon::{ConjugationTable, InsertionList, LexEntry};
pub use metrics::{ChrfConfig, ChrfScore};
pub use strategies::{AugmentationContext, Combination, StrategyName};

/// Seed used whenever the caller does not provide one.
pub const DEFAULT_SEED: u64 = 42;
