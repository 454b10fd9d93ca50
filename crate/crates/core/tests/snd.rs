use proptest::prelude::*;

use snd_gaze_core::embeddings::EmbeddingTable;
use snd_gaze_core::snd::{self, SndConfig};
use snd_gaze_core::Word;

fn table_strategy() -> impl Strategy<Value = EmbeddingTable<f64>> {
    (4usize..25, 1usize..6).prop_flat_map(|(n, d)| {
        prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), n).prop_filter_map("zero vector", |rows| {
            if rows.iter().any(|r| r.iter().all(|x| x.abs() < 1e-6)) {
                return None;
            }
            EmbeddingTable::from_rows(
                "p",
                rows.into_iter()
                    .enumerate()
                    .map(|(i, v)| (Word::new(format!("w{i:02}")), v))
                    .collect::<Vec<_>>(),
            )
            .ok()
        })
    })
}

fn exhaustive() -> SndConfig {
    SndConfig {
        exhaustive: true,
        ..SndConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neighborhoods_are_symmetric_and_exclude_self(table in table_strategy()) {
        let report = snd::compute_all_snd(table.words(), &table, &exhaustive()).unwrap();
        let tau = report.threshold.tau;
        for w in table.words() {
            let nw = snd::neighborhood(w, &table, table.words(), tau).unwrap();
            prop_assert!(!nw.contains(w));
            prop_assert_eq!(nw.len(), report.scores[w].neighborhood_size);
            for y in &nw {
                let ny = snd::neighborhood(y, &table, table.words(), tau).unwrap();
                prop_assert!(ny.contains(w));
            }
        }
    }

    #[test]
    fn arc_is_a_cosine(table in table_strategy()) {
        let report = snd::compute_all_snd(table.words(), &table, &exhaustive()).unwrap();
        for s in report.scores.values() {
            match s.arc {
                Some(a) => {
                    prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&a));
                    prop_assert_eq!(s.effective_value, a);
                }
                None => prop_assert_eq!(s.effective_value, snd::LOW_SND_SENTINEL),
            }
        }
    }

    #[test]
    fn seeded_runs_are_bit_identical(table in table_strategy(), seed in any::<u64>()) {
        let config = SndConfig { n_pairs: 50, seed, ..SndConfig::default() };
        let a = snd::compute_all_snd(table.words(), &table, &config).unwrap();
        let b = snd::compute_all_snd(table.words(), &table, &config).unwrap();
        prop_assert_eq!(a.threshold.tau.to_bits(), b.threshold.tau.to_bits());
        prop_assert_eq!(a.scores, b.scores);
    }

    #[test]
    fn positive_scaling_changes_nothing(table in table_strategy(), c in 0.01f64..100.0) {
        let a = snd::compute_all_snd(table.words(), &table, &exhaustive()).unwrap();
        let scaled = table.scaled(c);
        let b = snd::compute_all_snd(scaled.words(), &scaled, &exhaustive()).unwrap();
        for (w, s) in &a.scores {
            let t = &b.scores[w];
            prop_assert_eq!(s.neighborhood_size, t.neighborhood_size);
            prop_assert!((s.effective_value - t.effective_value).abs() <= 1e-9);
        }
    }
}

#[test]
fn words_outside_the_table_are_not_scored() {
    let table = EmbeddingTable::from_rows(
        "t",
        vec![
            (Word::from("a"), vec![1.0, 0.0]),
            (Word::from("b"), vec![0.0, 1.0]),
            (Word::from("c"), vec![1.0, 1.0]),
        ],
    )
    .unwrap();
    let vocab = [Word::from("a"), Word::from("b"), Word::from("c"), Word::from("zzz")];
    let report = snd::compute_all_snd(vocab.iter(), &table, &exhaustive()).unwrap();
    assert_eq!(report.scores.len(), 3);
    assert_eq!(report.coverage.missing, vec![Word::from("zzz")]);
}
