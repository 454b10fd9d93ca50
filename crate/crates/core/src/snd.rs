//! Semantic neighborhood density.
//!
//! A global distance threshold `tau = mean - 1.5 * sd` is estimated from
//! pairwise Euclidean distances between embedded vocabulary words. A word's
//! neighborhood is every other word within `tau` of it, and its SND is the
//! mean cosine similarity to those neighbors (ARC). Words without neighbors
//! have no ARC and take the [`LOW_SND_SENTINEL`] downstream.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::{self, Coverage, EmbeddingTable, VectorError};
use crate::scalar::Scalar;
use crate::Word;

/// Effective SND for words with an empty neighborhood (the cosine floor).
pub const LOW_SND_SENTINEL: f64 = -1.0;
pub const DEFAULT_PAIRS: usize = 10_000;
const TAU_SD_MULTIPLIER: f64 = 1.5;

#[derive(Debug, thiserror::Error)]
pub enum SndError {
    #[error("need at least 2 embedded vocabulary words, found {0}")]
    TooFewWords(usize),
    #[error("number of sampled pairs must be at least 1")]
    NoPairs,
    #[error("word {0:?} has no embedding")]
    NotEmbedded(Word),
    #[error("{word:?}: {source}")]
    Vector { word: Word, source: VectorError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaConvention {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SndConfig {
    pub n_pairs: usize,
    pub seed: u64,
    /// Use every unordered pair instead of sampling.
    pub exhaustive: bool,
    pub sigma: SigmaConvention,
}

impl Default for SndConfig {
    fn default() -> Self {
        SndConfig {
            n_pairs: DEFAULT_PAIRS,
            seed: 0,
            exhaustive: false,
            sigma: SigmaConvention::Population,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate<T> {
    pub tau: T,
    pub mu_d: T,
    pub sigma_d: T,
    pub n_pairs_sampled: usize,
    pub seed: u64,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SndScore<T> {
    pub word: Word,
    pub arc: Option<T>,
    pub neighborhood_size: usize,
    pub effective_value: T,
}

impl<T: Scalar> SndScore<T> {
    fn new(word: Word, arc: Option<T>, neighborhood_size: usize) -> Self {
        SndScore {
            word,
            arc,
            neighborhood_size,
            effective_value: arc.unwrap_or_else(|| T::lit(LOW_SND_SENTINEL)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SndReport<T> {
    pub scores: BTreeMap<Word, SndScore<T>>,
    pub threshold: ThresholdEstimate<T>,
    pub coverage: Coverage,
}

impl<T: Scalar> SndReport<T> {
    /// Effective SND per word (ARC, or the sentinel).
    pub fn effective(&self) -> BTreeMap<Word, T> {
        self.scores
            .iter()
            .map(|(w, s)| (w.clone(), s.effective_value))
            .collect()
    }
}

/// Row indices of vocabulary words present in the table, ordered by word.
fn covered_rows<'a, T: Scalar>(
    table: &EmbeddingTable<T>,
    vocab_words: impl IntoIterator<Item = &'a Word>,
) -> Vec<(Word, usize)> {
    let index: std::collections::HashMap<&str, usize> = table
        .words()
        .iter()
        .enumerate()
        .map(|(i, w)| (w.surface(), i))
        .collect();
    let unique: BTreeSet<&Word> = vocab_words.into_iter().collect();
    unique
        .into_iter()
        .filter_map(|w| index.get(w.surface()).map(|&i| (w.clone(), i)))
        .collect()
}

fn threshold_from_rows<T: Scalar>(
    table: &EmbeddingTable<T>,
    rows: &[usize],
    config: &SndConfig,
) -> Result<ThresholdEstimate<T>, SndError> {
    let n = rows.len();
    if n < 2 {
        return Err(SndError::TooFewWords(n));
    }
    let distances: Vec<T> = if config.exhaustive {
        let mut d = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                d.push(embeddings::distance_unchecked(table.row(rows[i]), table.row(rows[j])));
            }
        }
        d
    } else {
        if config.n_pairs == 0 {
            return Err(SndError::NoPairs);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        (0..config.n_pairs)
            .map(|_| {
                // uniform over unordered pairs of distinct words
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                embeddings::distance_unchecked(table.row(rows[i]), table.row(rows[j]))
            })
            .collect()
    };
    let count = T::from_count(distances.len());
    let mu_d = distances.iter().copied().sum::<T>() / count;
    let ss = distances
        .iter()
        .map(|&d| (d - mu_d) * (d - mu_d))
        .sum::<T>();
    let denom = match config.sigma {
        SigmaConvention::Population => count,
        SigmaConvention::Sample if distances.len() > 1 => count - T::one(),
        SigmaConvention::Sample => count,
    };
    let sigma_d = (ss / denom).sqrt();
    let tau = mu_d - T::lit(TAU_SD_MULTIPLIER) * sigma_d;
    if tau <= T::zero() {
        log::warn!("SND threshold tau = {tau} is not positive; every neighborhood will be empty or degenerate");
    }
    Ok(ThresholdEstimate {
        tau,
        mu_d,
        sigma_d,
        n_pairs_sampled: distances.len(),
        seed: config.seed,
        exhaustive: config.exhaustive,
    })
}

/// Estimates the global distance threshold from sampled (or all) pairs of
/// embedded vocabulary words. Deterministic for a fixed seed.
pub fn estimate_threshold<'a, T: Scalar>(
    table: &EmbeddingTable<T>,
    vocab_words: impl IntoIterator<Item = &'a Word>,
    config: &SndConfig,
) -> Result<ThresholdEstimate<T>, SndError> {
    let rows: Vec<usize> = covered_rows(table, vocab_words)
        .into_iter()
        .map(|(_, i)| i)
        .collect();
    threshold_from_rows(table, &rows, config)
}

/// Every other embedded vocabulary word within `tau` of `word`.
pub fn neighborhood<'a, T: Scalar>(
    word: &Word,
    table: &EmbeddingTable<T>,
    vocab_words: impl IntoIterator<Item = &'a Word>,
    tau: T,
) -> Result<BTreeSet<Word>, SndError> {
    let center = table
        .get(word.surface())
        .ok_or_else(|| SndError::NotEmbedded(word.clone()))?;
    Ok(covered_rows(table, vocab_words)
        .into_iter()
        .filter(|(w, i)| w != word && embeddings::distance_unchecked(center, table.row(*i)) <= tau)
        .map(|(w, _)| w)
        .collect())
}

/// Mean cosine similarity between `word` and its neighbors; `None` for an
/// empty neighborhood.
pub fn arc_snd<'a, T: Scalar>(
    word: &Word,
    neighbors: impl IntoIterator<Item = &'a Word>,
    table: &EmbeddingTable<T>,
) -> Result<Option<T>, SndError> {
    let center = table
        .get(word.surface())
        .ok_or_else(|| SndError::NotEmbedded(word.clone()))?;
    let mut sum = T::zero();
    let mut n = 0usize;
    for y in neighbors {
        let v = table
            .get(y.surface())
            .ok_or_else(|| SndError::NotEmbedded(y.clone()))?;
        sum += embeddings::cosine_similarity(center, v).map_err(|source| SndError::Vector {
            word: word.clone(),
            source,
        })?;
        n += 1;
    }
    Ok((n > 0).then(|| sum / T::from_count(n)))
}

/// Threshold, neighborhoods and ARC for every embedded vocabulary word.
///
/// Neighborhoods are found by exact brute force. Words are processed in
/// parallel; the output does not depend on the number of threads.
pub fn compute_all_snd<'a, T: Scalar>(
    vocab_words: impl IntoIterator<Item = &'a Word>,
    table: &EmbeddingTable<T>,
    config: &SndConfig,
) -> Result<SndReport<T>, SndError> {
    let vocab: BTreeSet<&Word> = vocab_words.into_iter().collect();
    let coverage = table.coverage(vocab.iter().copied());
    let covered = covered_rows(table, vocab.iter().copied());
    let rows: Vec<usize> = covered.iter().map(|(_, i)| *i).collect();
    let threshold = threshold_from_rows(table, &rows, config)?;
    let tau = threshold.tau;
    let norms: Vec<T> = rows.iter().map(|&r| embeddings::norm(table.row(r))).collect();

    let scores: Vec<SndScore<T>> = covered
        .par_iter()
        .enumerate()
        .map(|(a, (word, row))| {
            let center = table.row(*row);
            let mut sum = T::zero();
            let mut size = 0usize;
            for (b, &other) in rows.iter().enumerate() {
                if a == b {
                    continue;
                }
                let v = table.row(other);
                if embeddings::distance_unchecked(center, v) <= tau {
                    if norms[a] == T::zero() || norms[b] == T::zero() {
                        return Err(SndError::Vector {
                            word: word.clone(),
                            source: VectorError::ZeroVector,
                        });
                    }
                    sum += embeddings::cosine_with_norms(center, v, norms[a], norms[b]);
                    size += 1;
                }
            }
            let arc = (size > 0).then(|| sum / T::from_count(size));
            Ok(SndScore::new(word.clone(), arc, size))
        })
        .collect::<Result<_, _>>()?;

    Ok(SndReport {
        scores: scores.into_iter().map(|s| (s.word.clone(), s)).collect(),
        threshold,
        coverage,
    })
}

/// Metadata written next to the SND CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SndMetadata {
    pub tau: f64,
    pub mu_d: f64,
    pub sigma_d: f64,
    pub n_pairs: usize,
    pub seed: u64,
    pub exhaustive: bool,
    pub coverage: CoverageSummary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub vocabulary_words: usize,
    pub covered: usize,
    pub missing: usize,
}

impl<T: Scalar> SndReport<T> {
    pub fn metadata(&self) -> SndMetadata {
        SndMetadata {
            tau: self.threshold.tau.to_f64_lossless(),
            mu_d: self.threshold.mu_d.to_f64_lossless(),
            sigma_d: self.threshold.sigma_d.to_f64_lossless(),
            n_pairs: self.threshold.n_pairs_sampled,
            seed: self.threshold.seed,
            exhaustive: self.threshold.exhaustive,
            coverage: CoverageSummary {
                vocabulary_words: self.coverage.vocabulary_words,
                covered: self.coverage.covered,
                missing: self.coverage.missing.len(),
            },
        }
    }
}

/// Writes `word,arc,neighborhood_size,effective_value`; `arc` is empty when
/// the neighborhood is empty.
pub fn write_snd_csv<T: Scalar, W: Write>(out: W, report: &SndReport<T>) -> io::Result<()> {
    let mut wtr = crate::csv_writer(out);
    wtr.write_record(["word", "arc", "neighborhood_size", "effective_value"])?;
    for s in report.scores.values() {
        wtr.write_record([
            s.word.surface(),
            &crate::fmt_opt(s.arc.map(|a| a.to_f64_lossless())),
            &s.neighborhood_size.to_string(),
            &s.effective_value.to_f64_lossless().to_string(),
        ])?;
    }
    wtr.flush()
}

#[derive(Deserialize)]
struct SndRow {
    word: Word,
    arc: Option<f64>,
    neighborhood_size: usize,
    effective_value: f64,
}

pub fn read_snd_csv(path: &Path) -> Result<BTreeMap<Word, SndScore<f64>>, SndError> {
    let csv_err = |source| SndError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut out = BTreeMap::new();
    for row in rdr.deserialize::<SndRow>() {
        let row = row.map_err(csv_err)?;
        if row.arc.is_none() != (row.neighborhood_size == 0) {
            return Err(SndError::Format {
                path: path.to_path_buf(),
                message: format!("{}: arc must be empty exactly when the neighborhood is", row.word),
            });
        }
        out.insert(
            row.word.clone(),
            SndScore {
                word: row.word,
                arc: row.arc,
                neighborhood_size: row.neighborhood_size,
                effective_value: row.effective_value,
            },
        );
    }
    Ok(out)
}

/// Sidecar path for an SND CSV: `snd.csv` -> `snd.meta.json`.
pub fn metadata_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(&str, &[f64])]) -> EmbeddingTable<f64> {
        EmbeddingTable::from_rows("t", rows.iter().map(|(w, v)| (Word::from(*w), v.to_vec()))).unwrap()
    }

    fn words(t: &EmbeddingTable<f64>) -> Vec<Word> {
        t.words().to_vec()
    }

    fn exhaustive() -> SndConfig {
        SndConfig {
            exhaustive: true,
            ..SndConfig::default()
        }
    }

    #[test]
    fn identical_vectors_give_zero_threshold() {
        let t = table(&[("a", &[1.0, 2.0]), ("b", &[1.0, 2.0]), ("c", &[1.0, 2.0])]);
        let est = estimate_threshold(&t, &words(&t), &SndConfig::default()).unwrap();
        assert_eq!((est.mu_d, est.sigma_d, est.tau), (0.0, 0.0, 0.0));
        assert_eq!(est.n_pairs_sampled, DEFAULT_PAIRS);

        let report = compute_all_snd(&words(&t), &t, &exhaustive()).unwrap();
        for s in report.scores.values() {
            assert!((s.arc.unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(s.neighborhood_size, 2);
        }
        let n = neighborhood(&Word::from("a"), &t, &words(&t), 0.0).unwrap();
        assert_eq!(n.len(), 2);
        assert!(!n.contains("a"));
    }

    #[test]
    fn exhaustive_threshold_matches_hand_computation() {
        // four points on a line: pair distances 1,2,4,1,3,2
        let t = table(&[("a", &[0.0]), ("b", &[1.0]), ("c", &[2.0]), ("d", &[4.0])]);
        let est = estimate_threshold(&t, &words(&t), &exhaustive()).unwrap();
        let d = [1.0f64, 2.0, 4.0, 1.0, 3.0, 2.0];
        let mu = d.iter().sum::<f64>() / 6.0;
        let sd = (d.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / 6.0).sqrt();
        assert_eq!(est.n_pairs_sampled, 6);
        assert!((est.mu_d - mu).abs() < 1e-15);
        assert!((est.sigma_d - sd).abs() < 1e-15);
        assert_eq!(est.tau, est.mu_d - 1.5 * est.sigma_d);
    }

    #[test]
    fn planted_tight_pair_are_mutual_neighbors() {
        let t = table(&[
            ("p", &[10.0, 10.0]),
            ("q", &[10.1, 10.0]),
            ("x", &[-30.0, 5.0]),
            ("y", &[40.0, -25.0]),
        ]);
        let w = words(&t);
        let est = estimate_threshold(&t, &w, &exhaustive()).unwrap();
        for word in &w {
            let n = neighborhood(word, &t, &w, est.tau).unwrap();
            match word.surface() {
                "p" => assert_eq!(n, BTreeSet::from([Word::from("q")])),
                "q" => assert_eq!(n, BTreeSet::from([Word::from("p")])),
                _ => assert!(n.is_empty()),
            }
        }
    }

    #[test]
    fn negative_tau_empties_neighborhoods() {
        let t = table(&[("a", &[0.0]), ("b", &[0.0])]);
        assert!(neighborhood(&Word::from("a"), &t, &words(&t), -0.5).unwrap().is_empty());
    }

    #[test]
    fn arc_examples() {
        let t = table(&[("w", &[1.0, 0.0]), ("u", &[0.0, 1.0]), ("v", &[1.0, 1.0]), ("s", &[2.0, 0.0])]);
        let w = Word::from("w");
        let arc = arc_snd(&w, &[Word::from("u"), Word::from("v")], &t).unwrap().unwrap();
        assert!((arc - (0.0 + 1.0 / 2f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((arc - 0.35355).abs() < 1e-5);
        assert_eq!(arc_snd(&w, &[], &t).unwrap(), None);
        assert_eq!(arc_snd(&w, &[Word::from("s")], &t).unwrap(), Some(1.0));
        assert!(matches!(
            arc_snd(&w, &[Word::from("nope")], &t),
            Err(SndError::NotEmbedded(_))
        ));
    }

    #[test]
    fn zero_vector_neighbor_is_an_error() {
        let t = table(&[("z", &[0.0, 0.0]), ("a", &[0.0, 0.0]), ("b", &[0.0, 0.0])]);
        let err = compute_all_snd(&words(&t), &t, &exhaustive()).unwrap_err();
        assert!(matches!(err, SndError::Vector { source: VectorError::ZeroVector, .. }));
    }

    #[test]
    fn too_few_words() {
        let t = table(&[("a", &[1.0])]);
        let vocab = [Word::from("a"), Word::from("b")];
        assert!(matches!(
            estimate_threshold(&t, &vocab, &SndConfig::default()),
            Err(SndError::TooFewWords(1))
        ));
        let t = table(&[("a", &[1.0]), ("b", &[2.0])]);
        let cfg = SndConfig { n_pairs: 0, ..SndConfig::default() };
        assert!(matches!(estimate_threshold(&t, &vocab, &cfg), Err(SndError::NoPairs)));
    }

    #[test]
    fn missing_words_are_counted_not_scored() {
        let t = table(&[("a", &[1.0, 0.0]), ("b", &[0.9, 0.1]), ("c", &[0.0, 1.0])]);
        let vocab = [Word::from("a"), Word::from("b"), Word::from("c"), Word::from("zz")];
        let r = compute_all_snd(&vocab, &t, &exhaustive()).unwrap();
        assert_eq!(r.scores.len(), 3);
        assert_eq!(r.coverage.missing, vec![Word::from("zz")]);
        assert_eq!(r.metadata().coverage.missing, 1);
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let t = table(&[("a", &[0.0]), ("b", &[1.0]), ("c", &[3.0]), ("d", &[7.0])]);
        let cfg = SndConfig { n_pairs: 500, seed: 42, ..SndConfig::default() };
        let a = estimate_threshold(&t, &words(&t), &cfg).unwrap();
        let b = estimate_threshold(&t, &words(&t), &cfg).unwrap();
        assert_eq!(a, b);
        let c = estimate_threshold(&t, &words(&t), &SndConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.mu_d, c.mu_d);
    }

    #[test]
    fn sample_sigma_is_larger() {
        let t = table(&[("a", &[0.0]), ("b", &[1.0]), ("c", &[3.0])]);
        let pop = estimate_threshold(&t, &words(&t), &exhaustive()).unwrap();
        let cfg = SndConfig { sigma: SigmaConvention::Sample, ..exhaustive() };
        let smp = estimate_threshold(&t, &words(&t), &cfg).unwrap();
        assert!((smp.sigma_d / pop.sigma_d - (3.0f64 / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let t = table(&[("a", &[1.0, 0.0]), ("b", &[0.9, 0.1]), ("c", &[-5.0, 1.0])]);
        let r = compute_all_snd(&words(&t), &t, &exhaustive()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snd.csv");
        write_snd_csv(std::fs::File::create(&path).unwrap(), &r).unwrap();
        let back = read_snd_csv(&path).unwrap();
        assert_eq!(back, r.scores);
        assert_eq!(metadata_path(&path), dir.path().join("snd.meta.json"));
    }
}
