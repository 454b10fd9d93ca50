use std::cmp::Ordering;

use rayon::prelude::*;

use super::irls::{fit_logistic, predict, GlmConfig};
use super::GlmError;
use crate::scalar::Scalar;
use crate::Word;

/// Out-of-sample probabilities from leave-one-out cross validation.
#[derive(Debug, Clone, PartialEq)]
pub struct LooOutput<T> {
    /// In input order; `None` where the fold was skipped.
    pub probabilities: Vec<Option<T>>,
    /// Input indices of folds whose training rows held a single class.
    pub skipped_folds: Vec<usize>,
    /// Number of folds whose fit hit separation.
    pub separated_folds: usize,
}

fn feature_bits<T: Scalar>(row: &[T]) -> Vec<u64> {
    row.iter().map(|v| v.to_f64_lossless().to_bits()).collect()
}

/// Fits on every row but one and predicts the held-out row, for each row.
///
/// Training rows are put in a canonical order (word id, label, feature bit
/// patterns) before fitting, so the result depends only on the multiset of
/// rows and not on how the input was ordered.
pub fn loo_cv<T: Scalar>(
    features: &[Vec<T>],
    labels: &[bool],
    word_ids: &[Word],
    config: &GlmConfig,
) -> Result<LooOutput<T>, GlmError> {
    let n = features.len();
    if labels.len() != n || word_ids.len() != n {
        return Err(GlmError::LengthMismatch {
            expected: n,
            found: labels.len().min(word_ids.len()),
        });
    }
    if n < 3 {
        return Err(GlmError::TooFewRows { n, k: 2 });
    }
    let bits: Vec<Vec<u64>> = features.iter().map(|r| feature_bits(r)).collect();
    let mut canonical: Vec<usize> = (0..n).collect();
    canonical.sort_by(|&a, &b| {
        word_ids[a]
            .cmp(&word_ids[b])
            .then(labels[a].cmp(&labels[b]))
            .then_with(|| bits[a].cmp(&bits[b]))
            .then(Ordering::Equal)
    });

    let folds: Vec<Result<Option<(T, bool)>, GlmError>> = (0..n)
        .into_par_iter()
        .map(|held| {
            let train: Vec<usize> = canonical.iter().copied().filter(|&i| i != held).collect();
            let x: Vec<Vec<T>> = train.iter().map(|&i| features[i].clone()).collect();
            let y: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
            match fit_logistic(&x, &y, config) {
                Ok(fit) => Ok(Some((predict(&fit, &features[held])?, fit.separated))),
                Err(GlmError::SingleClass) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut out = LooOutput {
        probabilities: Vec::with_capacity(n),
        skipped_folds: Vec::new(),
        separated_folds: 0,
    };
    for (i, fold) in folds.into_iter().enumerate() {
        match fold? {
            Some((p, separated)) => {
                out.probabilities.push(Some(p));
                out.separated_folds += usize::from(separated);
            }
            None => {
                out.probabilities.push(None);
                out.skipped_folds.push(i);
            }
        }
    }
    Ok(out)
}
