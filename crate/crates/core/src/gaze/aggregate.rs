use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fixation::trials;
use super::{trial_metrics, AoiMetrics, FixationEvent, GazeError, Metric};
use crate::scalar::{total_cmp, Scalar};
use crate::Word;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue<T> {
    pub mean_ms: T,
    /// Number of values that entered the mean.
    pub n: usize,
}

/// How RPD occurrences are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RpdAggregate {
    /// Mean over every participant x occurrence value, like the other metrics.
    #[default]
    Mean,
    /// Occurrences summed within each participant, then averaged over
    /// participants.
    Sum,
}

impl std::str::FromStr for RpdAggregate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(RpdAggregate::Mean),
            "sum" => Ok(RpdAggregate::Sum),
            _ => Err(format!("unknown RPD aggregate {s:?} (expected mean or sum)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordGazeRecord<T> {
    pub word: Word,
    /// Indexed by [`Metric`] order (SFD, FFD, GD, RPD).
    pub values: [Option<MetricValue<T>>; 4],
}

impl<T: Scalar> WordGazeRecord<T> {
    pub fn new(word: Word) -> Self {
        WordGazeRecord {
            word,
            values: [None; 4],
        }
    }

    pub fn get(&self, metric: Metric) -> Option<T> {
        self.values[metric.index()].map(|v| v.mean_ms)
    }

    pub fn n_observations(&self, metric: Metric) -> usize {
        self.values[metric.index()].map_or(0, |v| v.n)
    }

    pub fn set(&mut self, metric: Metric, value: Option<MetricValue<T>>) {
        self.values[metric.index()] = value;
    }
}

/// Mean summed in sorted order, so the result does not depend on input order.
fn sorted_mean<T: Scalar>(mut values: Vec<T>) -> Option<MetricValue<T>> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| total_cmp(a, b));
    let n = values.len();
    let sum: T = values.into_iter().sum();
    Some(MetricValue {
        mean_ms: sum / T::from_count(n),
        n,
    })
}

/// Word-level aggregation of per-trial metrics.
///
/// `observations` pairs each AOI result with its participant id. Undefined
/// values are skipped; a metric with no defined value is absent.
pub fn aggregate_word_level<T: Scalar>(
    observations: &[(String, AoiMetrics<T>)],
    rpd: RpdAggregate,
) -> BTreeMap<Word, WordGazeRecord<T>> {
    let mut values: BTreeMap<&Word, [Vec<T>; 4]> = BTreeMap::new();
    let mut rpd_by_participant: BTreeMap<(&Word, &str), T> = BTreeMap::new();
    let mut rpd_parts: BTreeMap<(&Word, &str), Vec<T>> = BTreeMap::new();
    for (participant, m) in observations {
        let slot = values.entry(&m.word).or_default();
        for metric in Metric::ALL {
            if metric == Metric::Rpd && rpd == RpdAggregate::Sum {
                continue;
            }
            if let Some(v) = m.get(metric) {
                slot[metric.index()].push(v);
            }
        }
        if rpd == RpdAggregate::Sum {
            rpd_parts
                .entry((&m.word, participant.as_str()))
                .or_default()
                .push(m.rpd);
        }
    }
    for (key, mut parts) in rpd_parts {
        parts.sort_by(|a, b| total_cmp(a, b));
        rpd_by_participant.insert(key, parts.into_iter().sum());
    }
    for ((word, _), total) in rpd_by_participant {
        values.entry(word).or_default()[Metric::Rpd.index()].push(total);
    }

    values
        .into_iter()
        .map(|(word, per_metric)| {
            let mut rec = WordGazeRecord::new(word.clone());
            for (metric, v) in Metric::ALL.into_iter().zip(per_metric) {
                rec.set(metric, sorted_mean(v));
            }
            (word.clone(), rec)
        })
        .collect()
}

/// Per-trial metrics for every (participant, trial), then word-level
/// aggregation. `events` must come from [`super::prepare_events`].
pub fn compute_word_gaze<T: Scalar>(
    events: &[FixationEvent<T>],
    rpd: RpdAggregate,
) -> BTreeMap<Word, WordGazeRecord<T>> {
    let observations: Vec<(String, AoiMetrics<T>)> = trials(events)
        .par_iter()
        .flat_map_iter(|trial| {
            let participant = trial[0].participant.clone();
            trial_metrics(trial)
                .into_iter()
                .map(move |m| (participant.clone(), m))
        })
        .collect();
    aggregate_word_level(&observations, rpd)
}

/// Long format: `word,metric,value_ms,n_observations`, one row per defined
/// metric.
pub fn write_gaze_csv<T: Scalar, W: Write>(
    out: W,
    records: &BTreeMap<Word, WordGazeRecord<T>>,
) -> std::io::Result<()> {
    let mut wtr = crate::csv_writer(out);
    wtr.write_record(["word", "metric", "value_ms", "n_observations"])?;
    for rec in records.values() {
        for metric in Metric::ALL {
            if let Some(v) = rec.values[metric.index()] {
                wtr.write_record([
                    rec.word.surface(),
                    metric.name(),
                    &v.mean_ms.to_f64_lossless().to_string(),
                    &v.n.to_string(),
                ])?;
            }
        }
    }
    wtr.flush()
}

#[derive(Deserialize)]
struct GazeRow {
    word: Word,
    metric: String,
    value_ms: f64,
    n_observations: usize,
}

pub fn read_gaze_csv(path: &Path) -> Result<BTreeMap<Word, WordGazeRecord<f64>>, GazeError> {
    let csv_err = |source| GazeError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut out: BTreeMap<Word, WordGazeRecord<f64>> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<GazeRow>().enumerate() {
        let row = row.map_err(csv_err)?;
        let line = i as u64 + 2;
        let metric: Metric = row.metric.parse()?;
        if !(row.value_ms.is_finite() && row.value_ms > 0.0) {
            return Err(GazeError::NonPositiveDuration {
                line,
                value: row.value_ms,
            });
        }
        if row.n_observations == 0 {
            return Err(GazeError::Parse {
                line,
                message: "n_observations must be at least 1".into(),
            });
        }
        let rec = out
            .entry(row.word.clone())
            .or_insert_with(|| WordGazeRecord::new(row.word));
        rec.set(
            metric,
            Some(MetricValue {
                mean_ms: row.value_ms,
                n: row.n_observations,
            }),
        );
    }
    Ok(out)
}
