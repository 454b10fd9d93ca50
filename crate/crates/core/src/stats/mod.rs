//! Model-free comparisons: winsorized permutation tests of means, Hedges' g
//! and Benjamini-Hochberg adjustment per family of four metrics.

pub mod describe;
mod effect;
mod fdr;
mod permutation;
mod winsor;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use effect::hedges_g;
pub use fdr::bh_fdr;
pub use permutation::{permutation_test_means, Alternative, PermutationMode, DEFAULT_PERMUTATIONS, MAX_EXHAUSTIVE};
pub use winsor::{winsorize, DEFAULT_LOWER_PCT, DEFAULT_UPPER_PCT};

use crate::gaze::{Metric, WordGazeRecord};
use crate::partition::{self, GroupAssignment, PartitionError, Scheme};
use crate::scalar::Scalar;
use crate::Word;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("invalid percentile cutoffs {lower}/{upper}")]
    InvalidPercentiles { lower: f64, upper: f64 },
    #[error("number of permutations must be at least 1")]
    NoPermutations,
    #[error("exhaustive permutation would enumerate {0} assignments")]
    TooManyPermutations(u128),
    #[error("need n1 + n2 >= 3 with both groups non-empty, got {n1} and {n2}")]
    TooFewObservations { n1: usize, n2: usize },
    #[error("pooled variance is zero")]
    ZeroVariance,
    #[error("p-value {0} is outside (0, 1]")]
    InvalidPValue(f64),
    #[error("no word has SND, TF and gaze data")]
    EmptyDomain,
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

/// Which side had the larger (winsorized) mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    G1Greater,
    G2Greater,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::G1Greater => "g1_greater",
            Direction::G2Greater => "g2_greater",
        }
    }
}

/// Which tails are clamped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WinsorTails {
    #[default]
    Both,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult<T> {
    pub metric: Metric,
    pub comparison: String,
    pub n1: usize,
    pub n2: usize,
    /// Winsorized means.
    pub mu1: T,
    pub mu2: T,
    pub hedges_g: T,
    pub p: T,
    pub p_fdr: T,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelFreeConfig {
    pub n_perm: usize,
    pub seed: u64,
    /// Enumerate every label assignment instead of sampling.
    pub exhaustive: bool,
    pub lower_pct: f64,
    pub upper_pct: f64,
    pub tails: WinsorTails,
    /// Compute Hedges' g on the raw rather than the winsorized samples.
    pub g_on_raw: bool,
    /// Replace each comparison's one-sided alternative with a two-sided one.
    pub two_sided: bool,
}

impl Default for ModelFreeConfig {
    fn default() -> Self {
        ModelFreeConfig {
            n_perm: DEFAULT_PERMUTATIONS,
            seed: 0,
            exhaustive: false,
            lower_pct: DEFAULT_LOWER_PCT,
            upper_pct: DEFAULT_UPPER_PCT,
            tails: WinsorTails::Both,
            g_on_raw: false,
            two_sided: false,
        }
    }
}

impl ModelFreeConfig {
    fn cutoffs(&self) -> (f64, f64) {
        match self.tails {
            WinsorTails::Both => (self.lower_pct, self.upper_pct),
            WinsorTails::Upper => (0.0, self.upper_pct),
        }
    }

    fn mode(&self, metric: Metric) -> PermutationMode {
        if self.exhaustive {
            PermutationMode::Exhaustive
        } else {
            PermutationMode::MonteCarlo {
                n_perm: self.n_perm,
                seed: self.seed.wrapping_add(metric.index() as u64),
            }
        }
    }
}

/// The three standard comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Snd,
    Tf,
    Joint,
}

impl Comparison {
    pub const ALL: [Comparison; 3] = [Comparison::Snd, Comparison::Tf, Comparison::Joint];

    pub fn label(self) -> &'static str {
        match self {
            Comparison::Snd => "HSND vs LSND",
            Comparison::Tf => "HF vs LF",
            Comparison::Joint => "HSND,LF vs Other",
        }
    }

    /// Hypothesized direction: high SND slower, low frequency slower, joint
    /// category slower.
    pub fn alternative(self) -> Alternative {
        match self {
            Comparison::Snd | Comparison::Joint => Alternative::G1Greater,
            Comparison::Tf => Alternative::G2Greater,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonOutcome<T> {
    pub results: Vec<ComparisonResult<T>>,
    /// Metrics that were skipped, with the reason.
    pub notes: Vec<String>,
}

fn observations<T: Scalar>(
    gaze: &BTreeMap<Word, WordGazeRecord<T>>,
    group: &BTreeSet<Word>,
    metric: Metric,
) -> Vec<T> {
    group
        .iter()
        .filter_map(|w| gaze.get(w).and_then(|r| r.get(metric)))
        .collect()
}

/// Tests every metric for one grouping and applies BH across the metrics
/// that could be tested. Metric `i` uses seed `config.seed + i`.
pub fn compare_groups<T: Scalar>(
    gaze: &BTreeMap<Word, WordGazeRecord<T>>,
    assignment: &GroupAssignment<T>,
    label: &str,
    alternative: Alternative,
    config: &ModelFreeConfig,
) -> Result<ComparisonOutcome<T>, StatsError> {
    let alternative = if config.two_sided {
        Alternative::TwoSided
    } else {
        alternative
    };
    let (lower, upper) = config.cutoffs();
    let mut results = Vec::new();
    let mut notes = Vec::new();
    for metric in Metric::ALL {
        let raw1 = observations(gaze, &assignment.group1, metric);
        let raw2 = observations(gaze, &assignment.group2, metric);
        if raw1.len() < 2 || raw2.len() < 2 {
            notes.push(format!(
                "{label} {metric}: skipped, groups have {} and {} observations (need 2 each)",
                raw1.len(),
                raw2.len()
            ));
            continue;
        }
        let s1 = winsorize(&raw1, lower, upper)?;
        let s2 = winsorize(&raw2, lower, upper)?;
        let g = if config.g_on_raw {
            hedges_g(&raw1, &raw2)
        } else {
            hedges_g(&s1, &s2)
        };
        let g = match g {
            Ok(g) => g,
            Err(StatsError::ZeroVariance) => {
                notes.push(format!("{label} {metric}: skipped, pooled variance is zero"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let p = permutation_test_means(&s1, &s2, config.mode(metric), alternative)?;
        let mu1 = describe::mean(&s1).expect("non-empty");
        let mu2 = describe::mean(&s2).expect("non-empty");
        results.push(ComparisonResult {
            metric,
            comparison: label.to_owned(),
            n1: s1.len(),
            n2: s2.len(),
            mu1,
            mu2,
            hedges_g: g,
            p,
            p_fdr: p,
            direction: if mu1 >= mu2 {
                Direction::G1Greater
            } else {
                Direction::G2Greater
            },
        });
    }
    let ps: Vec<T> = results.iter().map(|r| r.p).collect();
    for (r, adj) in results.iter_mut().zip(bh_fdr(&ps)?) {
        r.p_fdr = adj;
    }
    Ok(ComparisonOutcome { results, notes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFreeReport<T> {
    pub results: Vec<ComparisonResult<T>>,
    pub notes: Vec<String>,
    /// SND median, TF median and joint assignments over the analysis domain.
    pub assignments: Vec<GroupAssignment<T>>,
    pub domain_size: usize,
}

/// Builds the SND, TF and joint groupings over words that have an SND
/// score, a term frequency and gaze data, and runs the three comparisons.
pub fn run_model_free<T: Scalar>(
    gaze: &BTreeMap<Word, WordGazeRecord<T>>,
    snd: &BTreeMap<Word, T>,
    tf: &BTreeMap<Word, T>,
    config: &ModelFreeConfig,
) -> Result<ModelFreeReport<T>, StatsError> {
    let domain: BTreeSet<Word> = gaze
        .keys()
        .filter(|w| snd.contains_key(*w) && tf.contains_key(*w))
        .cloned()
        .collect();
    if domain.is_empty() {
        return Err(StatsError::EmptyDomain);
    }
    let restrict = |m: &BTreeMap<Word, T>| -> BTreeMap<Word, T> {
        domain.iter().map(|w| (w.clone(), m[w])).collect()
    };
    let snd_split = partition::median_split(&restrict(snd), Scheme::SndMedian)?;
    let tf_split = partition::median_split(&restrict(tf), Scheme::TfMedian)?;
    let joint = partition::joint_group(&snd_split.group1, &tf_split.group2, &domain);

    let mut results = Vec::new();
    let mut notes = Vec::new();
    for (comparison, assignment) in Comparison::ALL.into_iter().zip([&snd_split, &tf_split, &joint]) {
        if assignment.is_degenerate() {
            notes.push(format!("{}: skipped, a group is empty", comparison.label()));
            continue;
        }
        let out = compare_groups(gaze, assignment, comparison.label(), comparison.alternative(), config)?;
        results.extend(out.results);
        notes.extend(out.notes);
    }
    Ok(ModelFreeReport {
        results,
        notes,
        assignments: vec![snd_split, tf_split, joint],
        domain_size: domain.len(),
    })
}

/// Writes `metric,comparison,n1,n2,mu1,mu2,hedges_g,p,p_fdr` and, when
/// `with_direction` is set, a trailing `direction` column.
pub fn write_comparisons_csv<T: Scalar, W: Write>(
    out: W,
    results: &[ComparisonResult<T>],
    with_direction: bool,
) -> std::io::Result<()> {
    let mut wtr = crate::csv_writer(out);
    let mut header = vec!["metric", "comparison", "n1", "n2", "mu1", "mu2", "hedges_g", "p", "p_fdr"];
    if with_direction {
        header.push("direction");
    }
    wtr.write_record(&header)?;
    for r in results {
        let num = |v: T| v.to_f64_lossless().to_string();
        let mut row = vec![
            r.metric.name().to_owned(),
            r.comparison.clone(),
            r.n1.to_string(),
            r.n2.to_string(),
            num(r.mu1),
            num(r.mu2),
            num(r.hedges_g),
            num(r.p),
            num(r.p_fdr),
        ];
        if with_direction {
            row.push(r.direction.name().to_owned());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()
}

#[derive(Deserialize)]
struct ComparisonRow {
    metric: Metric,
    comparison: String,
    n1: usize,
    n2: usize,
    mu1: f64,
    mu2: f64,
    hedges_g: f64,
    p: f64,
    p_fdr: f64,
    direction: Option<Direction>,
}

/// Reads either CSV layout. Without a `direction` column it is recovered
/// from the means.
pub fn read_comparisons_csv(path: &Path) -> Result<Vec<ComparisonResult<f64>>, StatsError> {
    let csv_err = |source| StatsError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<ComparisonRow>() {
        let r = row.map_err(csv_err)?;
        out.push(ComparisonResult {
            metric: r.metric,
            comparison: r.comparison,
            n1: r.n1,
            n2: r.n2,
            mu1: r.mu1,
            mu2: r.mu2,
            hedges_g: r.hedges_g,
            p: r.p,
            p_fdr: r.p_fdr,
            direction: r.direction.unwrap_or(if r.mu1 >= r.mu2 {
                Direction::G1Greater
            } else {
                Direction::G2Greater
            }),
        });
    }
    Ok(out)
}
