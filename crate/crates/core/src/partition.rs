//! High/low groupings of the vocabulary and label sets for the prediction
//! tasks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::gaze::{Metric, WordGazeRecord};
use crate::scalar::Scalar;
use crate::stats::describe::{median, quantile};
use crate::Word;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    SndMedian,
    TfMedian,
    JointHsndLf,
    MetricMedian(Metric),
    MetricQuartile(Metric),
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::SndMedian => f.write_str("snd_median"),
            Scheme::TfMedian => f.write_str("tf_median"),
            Scheme::JointHsndLf => f.write_str("joint_hsnd_lf"),
            Scheme::MetricMedian(m) => write!(f, "metric_median({m})"),
            Scheme::MetricQuartile(m) => write!(f, "metric_quartile({m})"),
        }
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let metric_arg = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|m| m.parse::<Metric>().ok())
        };
        match s {
            "snd_median" => Ok(Scheme::SndMedian),
            "tf_median" => Ok(Scheme::TfMedian),
            "joint_hsnd_lf" => Ok(Scheme::JointHsndLf),
            _ => metric_arg("metric_median(")
                .map(Scheme::MetricMedian)
                .or_else(|| metric_arg("metric_quartile(").map(Scheme::MetricQuartile))
                .ok_or_else(|| format!("unknown scheme {s:?}")),
        }
    }
}

impl Serialize for Scheme {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scheme {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PartitionError {
    #[error("{scheme}: need at least {needed} scored words, found {found}")]
    TooFewWords {
        scheme: Scheme,
        needed: usize,
        found: usize,
    },
    #[error("{scheme}: degenerate split (all scores fall on one side of the cutpoint)")]
    Degenerate { scheme: Scheme },
    #[error("{scheme}: score for {word:?} is not finite")]
    NonFinite { scheme: Scheme, word: Word },
}

/// Two disjoint word groups. Group 1 is the "high" side for median and
/// quartile schemes and the joint HSND-LF category for the joint scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAssignment<T> {
    pub scheme: Scheme,
    pub cutpoints: Vec<T>,
    pub group1: BTreeSet<Word>,
    pub group2: BTreeSet<Word>,
}

impl<T: Scalar> GroupAssignment<T> {
    pub fn is_degenerate(&self) -> bool {
        self.group1.is_empty() || self.group2.is_empty()
    }
}

fn checked_values<T: Scalar>(
    scores: &BTreeMap<Word, T>,
    scheme: Scheme,
    needed: usize,
) -> Result<Vec<T>, PartitionError> {
    if scores.len() < needed {
        return Err(PartitionError::TooFewWords {
            scheme,
            needed,
            found: scores.len(),
        });
    }
    if let Some((w, _)) = scores.iter().find(|(_, v)| !v.is_finite()) {
        return Err(PartitionError::NonFinite {
            scheme,
            word: w.clone(),
        });
    }
    Ok(scores.values().copied().collect())
}

/// `group1 = {w : score(w) >= median}`, `group2` the rest.
pub fn median_split<T: Scalar>(
    scores: &BTreeMap<Word, T>,
    scheme: Scheme,
) -> Result<GroupAssignment<T>, PartitionError> {
    let values = checked_values(scores, scheme, 2)?;
    let m = median(&values).expect("non-empty");
    let (hi, lo): (Vec<_>, Vec<_>) = scores.iter().partition(|(_, &v)| v >= m);
    if lo.is_empty() {
        return Err(PartitionError::Degenerate { scheme });
    }
    Ok(GroupAssignment {
        scheme,
        cutpoints: vec![m],
        group1: hi.into_iter().map(|(w, _)| w.clone()).collect(),
        group2: lo.into_iter().map(|(w, _)| w.clone()).collect(),
    })
}

/// `group1 = hsnd ∩ lf` (restricted to `vocab`), `group2 = vocab \ group1`.
/// An empty group 1 is returned as is; see [`GroupAssignment::is_degenerate`].
pub fn joint_group<T: Scalar>(
    hsnd: &BTreeSet<Word>,
    lf: &BTreeSet<Word>,
    vocab: &BTreeSet<Word>,
) -> GroupAssignment<T> {
    let group1: BTreeSet<Word> = hsnd
        .intersection(lf)
        .filter(|w| vocab.contains(*w))
        .cloned()
        .collect();
    let group2 = vocab.difference(&group1).cloned().collect();
    if group1.is_empty() {
        log::warn!("joint HSND-LF group is empty");
    }
    GroupAssignment {
        scheme: Scheme::JointHsndLf,
        cutpoints: Vec::new(),
        group1,
        group2,
    }
}

/// `group1 = {score >= Q.75}`, `group2 = {score <= Q.25}` (type-7
/// quartiles); the middle is left out.
pub fn quartile_split<T: Scalar>(
    scores: &BTreeMap<Word, T>,
    scheme: Scheme,
) -> Result<GroupAssignment<T>, PartitionError> {
    let values = checked_values(scores, scheme, 4)?;
    let q1 = quantile(&values, 0.25).expect("non-empty");
    let q3 = quantile(&values, 0.75).expect("non-empty");
    if q1 >= q3 {
        return Err(PartitionError::Degenerate { scheme });
    }
    let pick = |keep: &dyn Fn(T) -> bool| -> BTreeSet<Word> {
        scores
            .iter()
            .filter(|(_, &v)| keep(v))
            .map(|(w, _)| w.clone())
            .collect()
    };
    Ok(GroupAssignment {
        scheme,
        cutpoints: vec![q1, q3],
        group1: pick(&|v| v >= q3),
        group2: pick(&|v| v <= q1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Median,
    Quartile,
}

impl SplitKind {
    pub const ALL: [SplitKind; 2] = [SplitKind::Median, SplitKind::Quartile];

    pub fn name(self) -> &'static str {
        match self {
            SplitKind::Median => "median",
            SplitKind::Quartile => "quartile",
        }
    }
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "median" => Ok(SplitKind::Median),
            "quartile" => Ok(SplitKind::Quartile),
            _ => Err(format!("unknown split {s:?} (expected median or quartile)")),
        }
    }
}

/// Binary labels for one prediction task: `true` for the high group.
///
/// Words without a value for `metric` are left out. By default words are
/// split on the metric itself; passing `split_on` (e.g. the SND scores)
/// splits the same words on those scores instead.
pub fn label_words_by_metric<T: Scalar>(
    gaze: &BTreeMap<Word, WordGazeRecord<T>>,
    metric: Metric,
    split: SplitKind,
    split_on: Option<&BTreeMap<Word, T>>,
) -> Result<(GroupAssignment<T>, Vec<(Word, bool)>), PartitionError> {
    let scores: BTreeMap<Word, T> = gaze
        .iter()
        .filter_map(|(w, rec)| {
            let v = match split_on {
                None => rec.get(metric),
                Some(alt) => rec.get(metric).and(alt.get(w).copied()),
            };
            v.map(|v| (w.clone(), v))
        })
        .collect();
    let assignment = match split {
        SplitKind::Median => {
            let scheme = Scheme::MetricMedian(metric);
            if scores.len() < 4 {
                return Err(PartitionError::TooFewWords {
                    scheme,
                    needed: 4,
                    found: scores.len(),
                });
            }
            median_split(&scores, scheme)?
        }
        SplitKind::Quartile => quartile_split(&scores, Scheme::MetricQuartile(metric))?,
    };
    let labels = scores
        .keys()
        .filter_map(|w| {
            if assignment.group1.contains(w) {
                Some((w.clone(), true))
            } else if assignment.group2.contains(w) {
                Some((w.clone(), false))
            } else {
                None
            }
        })
        .collect();
    Ok((assignment, labels))
}

/// Writes `{scheme, cutpoints, group1, group2}` as pretty JSON.
pub fn write_assignment_json<T: Scalar + Serialize, W: Write>(
    out: W,
    assignment: &GroupAssignment<T>,
) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(out, assignment)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(pairs: &[(&str, f64)]) -> BTreeMap<Word, f64> {
        pairs.iter().map(|&(w, v)| (Word::from(w), v)).collect()
    }

    fn set(words: &[&str]) -> BTreeSet<Word> {
        words.iter().map(|&w| Word::from(w)).collect()
    }

    #[test]
    fn median_ties_go_high() {
        let a = median_split(&scores(&[("a", 1.0), ("b", 2.0), ("c", 3.0)]), Scheme::SndMedian).unwrap();
        assert_eq!(a.group1, set(&["b", "c"]));
        assert_eq!(a.group2, set(&["a"]));
        assert_eq!(a.cutpoints, vec![2.0]);
    }

    #[test]
    fn even_median_is_midpoint() {
        let s = scores(&[("a", 1.0), ("b", 2.0), ("c", 3.0), ("d", 4.0)]);
        let a = median_split(&s, Scheme::TfMedian).unwrap();
        assert_eq!(a.cutpoints, vec![2.5]);
        assert_eq!(a.group1, set(&["c", "d"]));
    }

    #[test]
    fn sentinel_words_are_low() {
        let s = scores(&[("a", -1.0), ("b", 0.4), ("c", 0.6), ("d", -1.0), ("e", 0.5)]);
        let a = median_split(&s, Scheme::SndMedian).unwrap();
        assert!(a.group2.contains("a") && a.group2.contains("d"));
    }

    #[test]
    fn constant_scores_are_degenerate() {
        let s = scores(&[("a", 1.0), ("b", 1.0), ("c", 1.0), ("d", 1.0)]);
        assert_eq!(
            median_split(&s, Scheme::SndMedian),
            Err(PartitionError::Degenerate { scheme: Scheme::SndMedian })
        );
        assert!(quartile_split(&s, Scheme::SndMedian).is_err());
        assert!(median_split(&scores(&[("a", 1.0)]), Scheme::SndMedian).is_err());
    }

    #[test]
    fn joint() {
        let a: GroupAssignment<f64> = joint_group(&set(&["a", "b"]), &set(&["b", "c"]), &set(&["a", "b", "c", "d"]));
        assert_eq!(a.group1, set(&["b"]));
        assert_eq!(a.group2, set(&["a", "c", "d"]));
        let empty: GroupAssignment<f64> = joint_group(&set(&["a"]), &set(&["c"]), &set(&["a", "c"]));
        assert!(empty.is_degenerate());
    }

    #[test]
    fn quartiles() {
        let s: BTreeMap<Word, f64> = (1..=8).map(|i| (Word::new(format!("w{i}")), i as f64)).collect();
        let a = quartile_split(&s, Scheme::SndMedian).unwrap();
        assert_eq!(a.cutpoints, vec![2.75, 6.25]);
        assert_eq!(a.group1, set(&["w7", "w8"]));
        assert_eq!(a.group2, set(&["w1", "w2"]));

        let s: BTreeMap<Word, f64> = (0..100).map(|i| (Word::new(format!("w{i:03}")), i as f64)).collect();
        let a = quartile_split(&s, Scheme::SndMedian).unwrap();
        assert!(a.group1.len().abs_diff(25) <= 1 && a.group2.len().abs_diff(25) <= 1);
    }

    fn gaze(values: &[(&str, Option<f64>)]) -> BTreeMap<Word, WordGazeRecord<f64>> {
        values
            .iter()
            .map(|&(w, v)| {
                let mut r = WordGazeRecord::new(Word::from(w));
                r.set(Metric::Ffd, v.map(|mean_ms| crate::gaze::MetricValue { mean_ms, n: 1 }));
                r.set(Metric::Gd, Some(crate::gaze::MetricValue { mean_ms: 1.0, n: 1 }));
                (Word::from(w), r)
            })
            .collect()
    }

    #[test]
    fn labels_by_metric() {
        let g = gaze(&[("a", Some(100.0)), ("b", Some(200.0)), ("c", Some(300.0)), ("d", Some(400.0)), ("e", None)]);
        let (_, labels) = label_words_by_metric(&g, Metric::Ffd, SplitKind::Median, None).unwrap();
        let expect: Vec<(Word, bool)> = vec![
            ("a".into(), false),
            ("b".into(), false),
            ("c".into(), true),
            ("d".into(), true),
        ];
        assert_eq!(labels, expect);

        let names = ["a", "b", "c", "d", "e", "f", "g", "h"];
        let vals: Vec<(&str, Option<f64>)> = names.iter().enumerate().map(|(i, &n)| (n, Some(i as f64))).collect();
        let (_, labels) = label_words_by_metric(&gaze(&vals), Metric::Ffd, SplitKind::Quartile, None).unwrap();
        assert_eq!(labels.len(), 4);

        // the alternate score reverses the order
        let snd = scores(&[("a", 4.0), ("b", 3.0), ("c", 2.0), ("d", 1.0), ("e", 9.0)]);
        let (_, labels) = label_words_by_metric(&g, Metric::Ffd, SplitKind::Median, Some(&snd)).unwrap();
        assert_eq!(labels[0], ("a".into(), true));
        assert_eq!(labels.len(), 4);
    }

    #[test]
    fn scheme_round_trip() {
        for s in [
            Scheme::SndMedian,
            Scheme::TfMedian,
            Scheme::JointHsndLf,
            Scheme::MetricMedian(Metric::Rpd),
            Scheme::MetricQuartile(Metric::Sfd),
        ] {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        let a = median_split(&scores(&[("a", 1.0), ("b", 2.0)]), Scheme::MetricMedian(Metric::Gd)).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert!(json.starts_with(r#"{"scheme":"metric_median(gd)","cutpoints":[1.5],"group1":["b"],"group2":["a"]}"#));
        let back: GroupAssignment<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }
}
