//! Eye-gaze metrics from fixation logs.
//!
//! Fixations are grouped by (participant, trial). Within a trial each area of
//! interest (AOI) yields single fixation duration, first fixation duration,
//! gaze duration and regression path duration; those are then averaged per
//! word across participants and occurrences.

mod aggregate;
mod fixation;
mod metrics;

use std::fmt;
use std::io;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use aggregate::{
    aggregate_word_level, compute_word_gaze, read_gaze_csv, write_gaze_csv, MetricValue,
    RpdAggregate, WordGazeRecord,
};
pub use fixation::{ingest_fixations, prepare_events, read_fixations, write_fixations_csv, FixationEvent};
pub use metrics::{trial_metrics, AoiMetrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Sfd,
    Ffd,
    Gd,
    Rpd,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Sfd, Metric::Ffd, Metric::Gd, Metric::Rpd];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Sfd => "sfd",
            Metric::Ffd => "ffd",
            Metric::Gd => "gd",
            Metric::Rpd => "rpd",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = GazeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| GazeError::UnknownMetric(s.to_owned()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GazeError {
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: duration_ms must be positive and finite, got {value}")]
    NonPositiveDuration { line: u64, value: f64 },
    #[error("participant {participant:?} trial {trial:?}: fixation indices must run 0..n without gaps, expected {expected} found {found}")]
    NonConsecutiveIndices {
        participant: String,
        trial: String,
        expected: usize,
        found: usize,
    },
    #[error("participant {participant:?} trial {trial:?}: AOI {aoi_order} is labelled both {first:?} and {second:?}")]
    AoiWordConflict {
        participant: String,
        trial: String,
        aoi_order: usize,
        first: String,
        second: String,
    },
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}
