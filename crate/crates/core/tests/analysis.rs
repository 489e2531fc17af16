use igt_augment::analysis::{
    baseline_delta, best_combinations, emit_report, ingest_results, marginal_effect, Analysis, ExperimentRecord,
    ResultsTable, Split, Summary,
};
use igt_augment::prep::{Task, TrainSize};
use igt_augment::strategies::{enumerate_combinations, Combination, StrategyName, ARAPAHO_STRATEGIES};
use proptest::prelude::*;

fn arp_table(scores: &[f64], order: &[usize]) -> ResultsTable {
    let combos = enumerate_combinations(&ARAPAHO_STRATEGIES, "arp").unwrap();
    let mut records = Vec::new();
    let mut i = 0;
    for combo in &combos {
        for size in [TrainSize::Count(100), TrainSize::Full] {
            for seed in [1, 2] {
                for split in [Split::Eval, Split::Test] {
                    records.push(ExperimentRecord {
                        task: Task::FromHrl,
                        language: "arp".into(),
                        combination: combo.clone(),
                        train_size: size,
                        seed,
                        split,
                        chrf: scores[i],
                    });
                    i += 1;
                }
            }
        }
    }
    let shuffled = order.iter().map(|&j| records[j].clone()).collect();
    ResultsTable::new(shuffled).unwrap()
}

const CELLS: usize = 8 * 2 * 2 * 2;

proptest! {
    #[test]
    fn analyses_ignore_record_order(
        scores in proptest::collection::vec(0.0f64..100.0, CELLS),
        order in Just((0..CELLS).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let identity: Vec<usize> = (0..CELLS).collect();
        let (a, b) = (arp_table(&scores, &identity), arp_table(&scores, &order));
        for s in ARAPAHO_STRATEGIES {
            prop_assert_eq!(
                marginal_effect(&a, s, Task::FromHrl, "arp", Split::Test).unwrap(),
                marginal_effect(&b, s, Task::FromHrl, "arp", Split::Test).unwrap()
            );
        }
        prop_assert_eq!(best_combinations(&a, Task::FromHrl, "arp", 8).unwrap(), best_combinations(&b, Task::FromHrl, "arp", 8).unwrap());
        let all = [Analysis::BaselineDeltas, Analysis::MarginalEffects, Analysis::BestCombinations(3)];
        prop_assert_eq!(emit_report(&a, Task::FromHrl, "arp", &all).unwrap(), emit_report(&b, Task::FromHrl, "arp", &all).unwrap());
    }

    #[test]
    fn marginal_effect_is_the_mean_paired_difference(scores in proptest::collection::vec(0.0f64..100.0, CELLS)) {
        let identity: Vec<usize> = (0..CELLS).collect();
        let table = arp_table(&scores, &identity);
        let e = marginal_effect(&table, StrategyName::Perm, Task::FromHrl, "arp", Split::Test).unwrap();
        let mut diffs = Vec::new();
        for r in table.records().iter().filter(|r| r.split == Split::Test && !r.combination.contains(StrategyName::Perm)) {
            let with = r.combination.with(StrategyName::Perm);
            let paired = table.records().iter().find(|x| {
                x.split == Split::Test && x.combination == with && x.train_size == r.train_size && x.seed == r.seed
            }).unwrap();
            diffs.push(paired.chrf - r.chrf);
        }
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        prop_assert_eq!(e.summary.count, 4 * 2 * 2);
        prop_assert!((e.summary.mean - mean).abs() < 1e-9);
    }
}

#[test]
fn summary_statistics() {
    let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(s.mean, 2.5);
    assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert_eq!(Summary::of(&[7.0]).unwrap().std, 0.0);
    assert!(Summary::of(&[]).is_none());
}

#[test]
fn csv_with_reordered_columns_and_whitespace() {
    let csv = "seed, chrf, split, task, language, train_size, combination\n1, 40, test, igt, usp, full, Dup\n1, 38.5, test, igt, usp, full,\n";
    let t = ingest_results(csv).unwrap();
    let dup = Combination::parse("usp", "Dup").unwrap();
    let d = baseline_delta(&t, &dup, Task::Igt, TrainSize::Full, Split::Test).unwrap();
    assert_eq!(d.mean, 1.5);
    assert_eq!(d.formatted(), "1.50 (0.00)");
}
