use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use snd_gaze_core::stats::describe::quantile;
use snd_gaze_core::gaze::{MetricValue, WordGazeRecord};
use snd_gaze_core::stats::{
    bh_fdr, compare_groups, hedges_g, permutation_test_means, run_model_free, winsorize, Alternative,
    ModelFreeConfig, PermutationMode,
};
use snd_gaze_core::{Metric, Word};

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1000.0f64..1000.0, 2..40)
}

proptest! {
    #[test]
    fn winsorize_keeps_length_and_is_idempotent(s in sample(), lo in 0.0f64..20.0, hi in 80.0f64..100.0) {
        let w = winsorize(&s, lo, hi).unwrap();
        prop_assert_eq!(w.len(), s.len());
        // clamping again at the same cutoff values changes nothing
        let lo_cut = quantile(&s, lo / 100.0).unwrap();
        let hi_cut = quantile(&s, hi / 100.0).unwrap();
        let again: Vec<f64> = w.iter().map(|x| x.max(lo_cut).min(hi_cut)).collect();
        prop_assert_eq!(&again, &w);
        // order preserving
        for i in 0..s.len() {
            for j in 0..s.len() {
                if s[i] <= s[j] {
                    prop_assert!(w[i] <= w[j]);
                }
            }
        }
    }

    #[test]
    fn permutation_p_bounds_and_determinism(a in sample(), b in sample(), seed in any::<u64>()) {
        let n_perm = 199;
        let mode = PermutationMode::MonteCarlo { n_perm, seed };
        for alt in [Alternative::G1Greater, Alternative::G2Greater, Alternative::TwoSided] {
            let p = permutation_test_means(&a, &b, mode, alt).unwrap();
            prop_assert!(p >= 1.0 / (1.0 + n_perm as f64) && p <= 1.0);
            prop_assert_eq!(p, permutation_test_means(&a, &b, mode, alt).unwrap());
        }
    }

    #[test]
    fn hedges_g_is_affine_invariant(a in sample(), b in sample(), shift in -1e3f64..1e3, scale in 0.01f64..100.0) {
        let Ok(g) = hedges_g(&a, &b) else { return Ok(()); };
        let t = |v: &[f64]| v.iter().map(|x| x * scale + shift).collect::<Vec<_>>();
        let h = hedges_g(&t(&a), &t(&b)).unwrap();
        prop_assert!((g - h).abs() <= 1e-9 * g.abs().max(1.0));
        prop_assert!(g >= 0.0);
        prop_assert_eq!(g, hedges_g(&b, &a).unwrap());
    }

    #[test]
    fn bh_dominates_and_is_monotone(ps in prop::collection::vec(1e-6f64..=1.0, 1..30)) {
        let q = bh_fdr(&ps).unwrap();
        let mut pairs: Vec<(f64, f64)> = ps.iter().copied().zip(q.iter().copied()).collect();
        for &(p, adj) in &pairs {
            // p * m / rank can round a few ulp below p
            prop_assert!(adj >= p * (1.0 - 4.0 * f64::EPSILON) && adj <= 1.0);
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in pairs.windows(2) {
            prop_assert!(w[0].1 <= w[1].1);
        }
    }
}

fn gaze_from(values: &[(Word, f64)]) -> BTreeMap<Word, WordGazeRecord<f64>> {
    values
        .iter()
        .map(|(w, v)| {
            let mut r = WordGazeRecord::new(w.clone());
            for m in Metric::ALL {
                r.set(m, Some(MetricValue { mean_ms: *v, n: 10 }));
            }
            (w.clone(), r)
        })
        .collect()
}

/// A null dataset: gaze, SND and TF all independent.
fn null_inputs(
    seed: u64,
    n: usize,
) -> (BTreeMap<Word, WordGazeRecord<f64>>, BTreeMap<Word, f64>, BTreeMap<Word, f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let words: Vec<Word> = (0..n).map(|i| Word::new(format!("w{i:03}"))).collect();
    let gaze: Vec<(Word, f64)> = words.iter().map(|w| (w.clone(), 250.0 + 40.0 * normal.sample(&mut rng))).collect();
    let snd = words.iter().map(|w| (w.clone(), normal.sample(&mut rng))).collect();
    let tf = words.iter().map(|w| (w.clone(), normal.sample(&mut rng).exp())).collect();
    (gaze_from(&gaze), snd, tf)
}

#[test]
fn null_data_is_rarely_significant_after_fdr() {
    let config = ModelFreeConfig {
        n_perm: 499,
        ..ModelFreeConfig::default()
    };
    let seeds = 400;
    let mut clean = 0;
    for seed in 0..seeds {
        let (gaze, snd, tf) = null_inputs(seed, 80);
        let report = run_model_free(&gaze, &snd, &tf, &ModelFreeConfig { seed, ..config }).unwrap();
        let joint_sfd = report
            .results
            .iter()
            .find(|r| r.metric == Metric::Sfd && r.comparison == "HSND,LF vs Other")
            .unwrap();
        if joint_sfd.p_fdr > 0.05 {
            clean += 1;
        }
    }
    // the nominal rate is 0.95; allow three binomial standard errors for the finite seed count
    let slack = 3.0 * (0.05f64 * 0.95 / seeds as f64).sqrt();
    assert!(clean as f64 / seeds as f64 >= 0.95 - slack, "{clean}/{seeds}");
}

#[test]
fn compare_groups_is_deterministic() {
    let (gaze, snd, tf) = null_inputs(11, 60);
    let config = ModelFreeConfig {
        n_perm: 299,
        seed: 3,
        ..ModelFreeConfig::default()
    };
    let report = run_model_free(&gaze, &snd, &tf, &config).unwrap();
    let a = &report.assignments[0];
    let x = compare_groups(&gaze, a, "x", Alternative::G1Greater, &config).unwrap();
    let y = compare_groups(&gaze, a, "x", Alternative::G1Greater, &config).unwrap();
    assert_eq!(x, y);
}

#[test]
fn planted_shift_is_detected_in_the_right_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let normal = Normal::new(0.0, 20.0).unwrap();
    let words: Vec<Word> = (0..100).map(|i| Word::new(format!("w{i:03}"))).collect();
    // first half carries +30 ms and the high SND scores
    let gaze: Vec<(Word, f64)> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), 250.0 + if i < 50 { 30.0 } else { 0.0 } + normal.sample(&mut rng)))
        .collect();
    let snd: BTreeMap<Word, f64> = words.iter().enumerate().map(|(i, w)| (w.clone(), -(i as f64))).collect();
    let tf: BTreeMap<Word, f64> = words.iter().map(|w| (w.clone(), rng.random::<f64>())).collect();
    let report = run_model_free(&gaze_from(&gaze), &snd, &tf, &ModelFreeConfig::default()).unwrap();
    let r = report
        .results
        .iter()
        .find(|r| r.comparison == "HSND vs LSND" && r.metric == Metric::Ffd)
        .unwrap();
    assert!(r.p < 0.001 && r.hedges_g > 0.5, "{r:?}");
    assert_eq!(r.direction.name(), "g1_greater");
}
