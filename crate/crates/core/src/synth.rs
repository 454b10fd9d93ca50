//! Seeded synthetic datasets with a planted SND x TF gaze effect.
//!
//! Clustered words sit in tight groups in embedding space and end up with
//! high ARC; the remaining words are scattered. Token counts follow a Zipf
//! law over a random rank order. Every fixation on a word that is both
//! clustered and below the median count gets `gaze_effect_ms` added to its
//! duration.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{self, CorpusError, Language, Vocabulary};
use crate::embeddings::{self, EmbeddingError, EmbeddingTable};
use crate::gaze::{self, FixationEvent};
use crate::report::RunConfig;
use crate::Word;

/// Shortest plausible fixation; sampled durations are clamped up to it.
pub const MIN_FIXATION_MS: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterPlan {
    pub size: usize,
    /// Standard deviation of the cluster center around the origin.
    pub center_spread: f64,
    /// Standard deviation of members around the center.
    pub within_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_words: usize,
    pub dimension: usize,
    pub cluster_plan: Vec<ClusterPlan>,
    /// Standard deviation of unclustered words around the origin.
    pub scatter_spread: f64,
    /// Zipf exponent for token counts.
    pub tf_distribution: f64,
    /// Count of the rank-1 word.
    pub max_count: u64,
    /// How strongly clustered words are pushed toward rare ranks: 0 assigns
    /// ranks at random, 1 gives every clustered word a rarer rank than any
    /// scattered one.
    pub rarity_coupling: f64,
    pub gaze_base_ms: f64,
    pub gaze_effect_ms: f64,
    pub noise_sd_ms: f64,
    pub n_participants: usize,
    /// How many times each participant reads each word.
    pub occurrences: usize,
    pub words_per_trial: usize,
    pub refixation_prob: f64,
    pub regression_prob: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_words: 400,
            dimension: 32,
            cluster_plan: vec![
                ClusterPlan {
                    size: 10,
                    center_spread: 1.0,
                    within_spread: 0.05,
                };
                20
            ],
            scatter_spread: 1.0,
            tf_distribution: 1.1,
            max_count: 5000,
            rarity_coupling: 0.3,
            gaze_base_ms: 220.0,
            gaze_effect_ms: 30.0,
            noise_sd_ms: 30.0,
            n_participants: 10,
            occurrences: 4,
            words_per_trial: 20,
            refixation_prob: 0.2,
            regression_prob: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("infeasible spec: {0}")]
    Infeasible(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub table: EmbeddingTable<f64>,
    pub vocabulary: Vocabulary,
    /// Source text whose tokenization reproduces `vocabulary`.
    pub corpus_source: String,
    pub fixations: Vec<FixationEvent<f64>>,
    /// Clustered words.
    pub dense: BTreeSet<Word>,
    /// Clustered words with a below-median count; these carry the effect.
    pub planted: BTreeSet<Word>,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError::Infeasible(msg));
        let clustered: usize = self.cluster_plan.iter().map(|c| c.size).sum();
        if self.n_words < 4 {
            return fail(format!("n_words must be at least 4, got {}", self.n_words));
        }
        if clustered > self.n_words {
            return fail(format!("clusters hold {clustered} words but n_words is {}", self.n_words));
        }
        if self.dimension == 0 {
            return fail("dimension must be positive".into());
        }
        for c in &self.cluster_plan {
            if c.size == 0 || !(c.center_spread >= 0.0) || !(c.within_spread >= 0.0) {
                return fail(format!("invalid cluster {c:?}"));
            }
        }
        if !(self.scatter_spread >= 0.0) || !(self.noise_sd_ms >= 0.0) {
            return fail("spreads and noise must be non-negative".into());
        }
        if !(self.tf_distribution > 0.0) || self.max_count == 0 {
            return fail("Zipf exponent and max_count must be positive".into());
        }
        if self.n_participants == 0 || self.occurrences == 0 || self.words_per_trial == 0 {
            return fail("participants, occurrences and words_per_trial must be positive".into());
        }
        for p in [self.refixation_prob, self.regression_prob, self.rarity_coupling] {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("probability {p} outside [0, 1]"));
            }
        }
        if !self.gaze_base_ms.is_finite() || !self.gaze_effect_ms.is_finite() {
            return fail("gaze parameters must be finite".into());
        }
        Ok(())
    }
}

fn word_name(i: usize, width: usize) -> Word {
    Word::new(format!("w{:0width$}", i + 1))
}

fn gaussian_vector(rng: &mut ChaCha8Rng, center: &[f64], sd: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    center.iter().map(|&c| c + sd * normal.sample(rng)).collect()
}

/// Generates a dataset. Identical specs give identical data.
pub fn generate(spec: &SynthSpec) -> Result<SynthData, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_words;
    let width = n.to_string().len().max(4);
    let words: Vec<Word> = (0..n).map(|i| word_name(i, width)).collect();

    // embeddings
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let origin = vec![0.0; spec.dimension];
    let mut vectors: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut dense = BTreeSet::new();
    let mut next = 0;
    for plan in &spec.cluster_plan {
        let center = gaussian_vector(&mut rng, &origin, plan.center_spread);
        for &i in &order[next..next + plan.size] {
            vectors[i] = Some(gaussian_vector(&mut rng, &center, plan.within_spread));
            dense.insert(words[i].clone());
        }
        next += plan.size;
    }
    for &i in &order[next..] {
        vectors[i] = Some(gaussian_vector(&mut rng, &origin, spec.scatter_spread));
    }
    let table = EmbeddingTable::from_rows(
        "synth",
        words.iter().cloned().zip(vectors.into_iter().map(|v| v.expect("assigned"))),
    )?;

    // token counts
    let c = spec.rarity_coupling;
    let keys: Vec<f64> = words
        .iter()
        .map(|w| (1.0 - c) * rng.random::<f64>() + if dense.contains(w) { c } else { 0.0 })
        .collect();
    let mut by_key: Vec<usize> = (0..n).collect();
    by_key.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    let mut ranks = vec![0; n];
    for (r, &i) in by_key.iter().enumerate() {
        ranks[i] = r + 1;
    }
    let counts: Vec<u64> = ranks
        .iter()
        .map(|&r| {
            let c = (spec.max_count as f64 / (r as f64).powf(spec.tf_distribution)).round();
            (c as u64).max(1)
        })
        .collect();
    let mut sorted = counts.clone();
    sorted.sort_unstable();
    let median_count = (sorted[(n - 1) / 2] + sorted[n / 2]) as f64 / 2.0;
    let planted: BTreeSet<Word> = words
        .iter()
        .zip(&counts)
        .filter(|(w, &c)| dense.contains(*w) && (c as f64) < median_count)
        .map(|(w, _)| w.clone())
        .collect();
    let vocabulary = Vocabulary::from_counts(Language::C, words.iter().cloned().zip(counts.iter().copied()))?;

    let mut tokens: Vec<&str> = words
        .iter()
        .zip(&counts)
        .flat_map(|(w, &c)| std::iter::repeat_n(w.surface(), c as usize))
        .collect();
    tokens.shuffle(&mut rng);
    let mut corpus_source = String::from("/* synthetic corpus */\n");
    for line in tokens.chunks(12) {
        corpus_source.push_str(&line.join(" "));
        corpus_source.push_str(";\n");
    }

    // fixations
    let noise = Normal::new(0.0, spec.noise_sd_ms).expect("validated sd");
    let duration = |rng: &mut ChaCha8Rng, w: &Word| {
        let effect = if planted.contains(w) { spec.gaze_effect_ms } else { 0.0 };
        (spec.gaze_base_ms + effect + noise.sample(rng)).max(MIN_FIXATION_MS)
    };
    let mut fixations = Vec::new();
    let pwidth = spec.n_participants.to_string().len().max(2);
    for p in 0..spec.n_participants {
        let participant = format!("p{:0pwidth$}", p + 1);
        let mut trial_no = 0;
        for _ in 0..spec.occurrences {
            let mut reading: Vec<&Word> = words.iter().collect();
            reading.shuffle(&mut rng);
            for stimulus in reading.chunks(spec.words_per_trial) {
                trial_no += 1;
                let trial = format!("t{trial_no:03}");
                let mut index = 0;
                let mut fixate = |rng: &mut ChaCha8Rng, aoi: usize, out: &mut Vec<FixationEvent<f64>>| {
                    let w = stimulus[aoi];
                    out.push(FixationEvent {
                        participant: participant.clone(),
                        trial: trial.clone(),
                        index,
                        word: w.clone(),
                        aoi_order: aoi,
                        duration_ms: duration(rng, w),
                    });
                    index += 1;
                };
                for pos in 0..stimulus.len() {
                    fixate(&mut rng, pos, &mut fixations);
                    if rng.random_bool(spec.refixation_prob) {
                        fixate(&mut rng, pos, &mut fixations);
                    }
                    if pos > 0 && rng.random_bool(spec.regression_prob) {
                        let back = rng.random_range(0..pos);
                        fixate(&mut rng, back, &mut fixations);
                    }
                }
            }
        }
    }
    let fixations = gaze::prepare_events(fixations).expect("generated log is well formed");

    Ok(SynthData {
        table,
        vocabulary,
        corpus_source,
        fixations,
        dense,
        planted,
    })
}

#[derive(Serialize)]
struct PlantedOut<'a> {
    planted: &'a BTreeSet<Word>,
    dense: &'a BTreeSet<Word>,
}

fn create(path: &Path) -> Result<io::BufWriter<fs::File>, SynthError> {
    fs::File::create(path)
        .map(io::BufWriter::new)
        .map_err(|source| SynthError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Generates a dataset and writes it under `out_dir`:
/// `embeddings.jsonl`, `vocab.csv`, `fixations.csv`, `corpus/synth.c`,
/// `planted.json` and a ready-to-run `run.json` (outputs to `results/`).
pub fn write_synth(spec: &SynthSpec, out_dir: &Path) -> Result<SynthData, SynthError> {
    let data = generate(spec)?;
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SynthError::Io { path, source }
    };
    let corpus_dir = out_dir.join("corpus");
    fs::create_dir_all(&corpus_dir).map_err(io_err(&corpus_dir))?;

    let path = out_dir.join("embeddings.jsonl");
    let mut f = create(&path)?;
    embeddings::write_embedding_table(&mut f, &data.table).map_err(io_err(&path))?;
    f.flush().map_err(io_err(&path))?;

    corpus::write_vocabulary_csv(create(&out_dir.join("vocab.csv"))?, &data.vocabulary)?;

    let path = out_dir.join("fixations.csv");
    gaze::write_fixations_csv(create(&path)?, &data.fixations).map_err(io_err(&path))?;

    let path = corpus_dir.join("synth.c");
    fs::write(&path, &data.corpus_source).map_err(io_err(&path))?;

    let path = out_dir.join("planted.json");
    let json = serde_json::to_string_pretty(&PlantedOut {
        planted: &data.planted,
        dense: &data.dense,
    })
    .map_err(|source| SynthError::Json { path: path.clone(), source })?;
    fs::write(&path, json + "\n").map_err(io_err(&path))?;

    let path = out_dir.join("run.json");
    let config = RunConfig {
        corpus_dir: Some(PathBuf::from("corpus")),
        embeddings: vec![PathBuf::from("embeddings.jsonl")],
        fixations: PathBuf::from("fixations.csv"),
        language: Language::C,
        seed: spec.seed,
        out_dir: PathBuf::from("results"),
        ..RunConfig::default()
    };
    let json = serde_json::to_string_pretty(&config).map_err(|source| SynthError::Json { path: path.clone(), source })?;
    fs::write(&path, json + "\n").map_err(io_err(&path))?;
    Ok(data)
}
