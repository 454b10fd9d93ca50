use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{FixationEvent, Metric};
use crate::scalar::Scalar;
use crate::Word;

/// Metrics for one fixated AOI within one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoiMetrics<T> {
    pub word: Word,
    pub aoi_order: usize,
    /// Defined only when the AOI received exactly one fixation in the trial.
    pub sfd: Option<T>,
    pub ffd: T,
    pub gd: T,
    pub rpd: T,
    pub fixation_count: usize,
}

impl<T: Scalar> AoiMetrics<T> {
    pub fn get(&self, metric: Metric) -> Option<T> {
        match metric {
            Metric::Sfd => self.sfd,
            Metric::Ffd => Some(self.ffd),
            Metric::Gd => Some(self.gd),
            Metric::Rpd => Some(self.rpd),
        }
    }
}

struct Open<T> {
    word: Word,
    aoi: usize,
    count: usize,
    ffd: T,
    gd: T,
    gd_open: bool,
    rpd: T,
    rpd_open: bool,
}

/// Computes SFD, FFD, GD and RPD for every AOI fixated in one trial.
///
/// `events` must be one (participant, trial) in fixation order. A single
/// forward pass keeps, for every AOI seen so far, whether its first-pass run
/// (GD) and its regression path (RPD) are still open:
///
/// * GD closes at the first fixation on any other AOI.
/// * RPD closes at the first fixation on an AOI later in reading order;
///   if that never happens it runs to the end of the trial.
///
/// Output is ordered by `aoi_order`.
pub fn trial_metrics<T: Scalar>(events: &[FixationEvent<T>]) -> Vec<AoiMetrics<T>> {
    let mut open: Vec<Open<T>> = Vec::new();
    let mut by_aoi: HashMap<usize, usize> = HashMap::new();

    for f in events {
        let dur = f.duration_ms;
        for s in open.iter_mut().filter(|s| s.aoi != f.aoi_order) {
            s.gd_open = false;
            if s.rpd_open {
                if f.aoi_order > s.aoi {
                    s.rpd_open = false;
                } else {
                    s.rpd += dur;
                }
            }
        }
        match by_aoi.get(&f.aoi_order) {
            Some(&i) => {
                let s = &mut open[i];
                s.count += 1;
                if s.gd_open {
                    s.gd += dur;
                }
                if s.rpd_open {
                    s.rpd += dur;
                }
            }
            None => {
                by_aoi.insert(f.aoi_order, open.len());
                open.push(Open {
                    word: f.word.clone(),
                    aoi: f.aoi_order,
                    count: 1,
                    ffd: dur,
                    gd: dur,
                    gd_open: true,
                    rpd: dur,
                    rpd_open: true,
                });
            }
        }
    }

    let mut out: Vec<AoiMetrics<T>> = open
        .into_iter()
        .map(|s| AoiMetrics {
            word: s.word,
            aoi_order: s.aoi,
            sfd: (s.count == 1).then_some(s.ffd),
            ffd: s.ffd,
            gd: s.gd,
            rpd: s.rpd,
            fixation_count: s.count,
        })
        .collect();
    out.sort_by_key(|m| m.aoi_order);
    out
}
