//! Model-based analysis: a logistic GLM on (SND, TF) features predicting
//! whether a word falls in the high or low group of a gaze metric, scored by
//! leave-one-word-out cross validation.

mod cv;
mod eval;
mod irls;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use cv::{loo_cv, LooOutput};
pub use eval::{evaluate, roc_auc, EvalReport};
pub use irls::{fit_logistic, predict, GlmConfig, GlmFit};

use crate::gaze::{Metric, WordGazeRecord};
use crate::partition::{self, PartitionError, SplitKind};
use crate::scalar::Scalar;
use crate::Word;

#[derive(Debug, thiserror::Error)]
pub enum GlmError {
    #[error("labels contain a single class")]
    SingleClass,
    #[error("need more rows than parameters: {n} rows for {k} features")]
    TooFewRows { n: usize, k: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("features must be finite")]
    NonFinite,
    #[error("no rows to evaluate")]
    Empty,
    #[error("threshold must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("term frequency for {0:?} must be positive for the log transform")]
    NonPositiveTf(Word),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TfTransform {
    #[default]
    Log10,
    Raw,
}

/// What the model predicts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictors {
    /// Effective SND and transformed TF.
    #[default]
    SndTf,
    /// The gaze value of the labelled metric itself.
    GazeValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelBasedConfig {
    pub tf_transform: TfTransform,
    pub predictors: Predictors,
    /// Split words on their SND score instead of the metric value.
    pub label_on_snd: bool,
    pub threshold: f64,
    pub glm: GlmConfig,
}

impl Default for ModelBasedConfig {
    fn default() -> Self {
        ModelBasedConfig {
            tf_transform: TfTransform::Log10,
            predictors: Predictors::SndTf,
            label_on_snd: false,
            threshold: 0.5,
            glm: GlmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBasedResult {
    pub category: Metric,
    /// Embedding source the SND scores came from.
    pub model: String,
    pub split: SplitKind,
    pub report: EvalReport,
    /// Words that received a label (before skipped folds).
    pub n_labeled: usize,
    pub skipped_folds: usize,
    pub separated_folds: usize,
}

/// One prediction task: label words by `metric` under `split`, build the
/// feature rows and score a LOO-validated logistic model.
///
/// Words need an SND score, a TF value and a defined `metric`.
#[allow(clippy::too_many_arguments)]
pub fn run_model_based<T: Scalar>(
    snd: &BTreeMap<Word, T>,
    tf: &BTreeMap<Word, T>,
    gaze: &BTreeMap<Word, WordGazeRecord<T>>,
    metric: Metric,
    split: SplitKind,
    model: &str,
    config: &ModelBasedConfig,
) -> Result<ModelBasedResult, GlmError> {
    let domain: BTreeMap<Word, WordGazeRecord<T>> = gaze
        .iter()
        .filter(|(w, r)| snd.contains_key(*w) && tf.contains_key(*w) && r.get(metric).is_some())
        .map(|(w, r)| (w.clone(), r.clone()))
        .collect();
    let split_on = config.label_on_snd.then_some(snd);
    let (_, labelled) = partition::label_words_by_metric(&domain, metric, split, split_on)?;

    let mut features = Vec::with_capacity(labelled.len());
    for (w, _) in &labelled {
        let row = match config.predictors {
            Predictors::SndTf => {
                let t = tf[w];
                let t = match config.tf_transform {
                    TfTransform::Raw => t,
                    TfTransform::Log10 if t > T::zero() => t.log10(),
                    TfTransform::Log10 => return Err(GlmError::NonPositiveTf(w.clone())),
                };
                vec![snd[w], t]
            }
            Predictors::GazeValue => vec![domain[w].get(metric).expect("in domain")],
        };
        features.push(row);
    }
    let labels: Vec<bool> = labelled.iter().map(|(_, y)| *y).collect();
    let ids: Vec<Word> = labelled.iter().map(|(w, _)| w.clone()).collect();
    let loo = loo_cv(&features, &labels, &ids, &config.glm)?;

    let (probs, kept): (Vec<T>, Vec<bool>) = loo
        .probabilities
        .iter()
        .zip(&labels)
        .filter_map(|(p, &y)| p.map(|p| (p, y)))
        .unzip();
    let report = evaluate(&probs, &kept, config.threshold)?;
    Ok(ModelBasedResult {
        category: metric,
        model: model.to_owned(),
        split,
        report,
        n_labeled: labels.len(),
        skipped_folds: loo.skipped_folds.len(),
        separated_folds: loo.separated_folds,
    })
}

pub const MODEL_BASED_COLUMNS: [&str; 12] = [
    "category", "model", "split", "accuracy", "precision", "recall", "f1", "roc_auc", "tn", "fp", "fn", "tp",
];

/// Writes `category,model,split,accuracy,precision,recall,f1,roc_auc,tn,fp,fn,tp`.
pub fn write_model_based_csv<W: Write>(out: W, results: &[ModelBasedResult]) -> std::io::Result<()> {
    let mut wtr = crate::csv_writer(out);
    wtr.write_record(MODEL_BASED_COLUMNS)?;
    for r in results {
        let e = &r.report;
        wtr.write_record([
            r.category.name().to_owned(),
            r.model.clone(),
            r.split.name().to_owned(),
            e.accuracy.to_string(),
            e.precision.to_string(),
            e.recall.to_string(),
            e.f1.to_string(),
            e.roc_auc.to_string(),
            e.tn.to_string(),
            e.fp.to_string(),
            e.fn_.to_string(),
            e.tp.to_string(),
        ])?;
    }
    wtr.flush()
}

#[derive(Deserialize)]
struct ModelBasedRow {
    category: Metric,
    model: String,
    split: SplitKind,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
    roc_auc: f64,
    tn: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    tp: usize,
}

/// Reads the table back. Columns absent from the CSV (counts of skipped or
/// separated folds, degeneracy flags) come back as zero/false.
pub fn read_model_based_csv(path: &Path) -> Result<Vec<ModelBasedResult>, GlmError> {
    let csv_err = |source| GlmError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<ModelBasedRow>() {
        let r = row.map_err(csv_err)?;
        let n = r.tn + r.fp + r.fn_ + r.tp;
        out.push(ModelBasedResult {
            category: r.category,
            model: r.model,
            split: r.split,
            report: EvalReport {
                accuracy: r.accuracy,
                precision: r.precision,
                recall: r.recall,
                f1: r.f1,
                roc_auc: r.roc_auc,
                tn: r.tn,
                fp: r.fp,
                fn_: r.fn_,
                tp: r.tp,
                n,
                zero_division: false,
                single_class: false,
            },
            n_labeled: n,
            skipped_folds: 0,
            separated_folds: 0,
        });
    }
    Ok(out)
}
