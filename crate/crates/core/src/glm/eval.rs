use serde::{Deserialize, Serialize};

use super::GlmError;
use crate::scalar::{total_cmp, Scalar};

/// Classification metrics at a fixed threshold plus rank-based AUC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: f64,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tp: usize,
    pub n: usize,
    /// A precision, recall or F1 denominator was zero and the value set to 0.
    pub zero_division: bool,
    /// Only one class was present, so AUC was set to 0.5.
    pub single_class: bool,
}

fn ratio(num: usize, den: usize, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Mann-Whitney AUC with average ranks for ties.
pub fn roc_auc<T: Scalar>(probabilities: &[T], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..probabilities.len()).collect();
    order.sort_by(|&a, &b| total_cmp(&probabilities[a], &probabilities[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && probabilities[order[j + 1]] == probabilities[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their average
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            if labels[k] {
                rank_sum_pos += avg;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Some((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Confusion matrix at `probability >= threshold`, derived metrics and AUC.
pub fn evaluate<T: Scalar>(probabilities: &[T], labels: &[bool], threshold: f64) -> Result<EvalReport, GlmError> {
    if probabilities.len() != labels.len() {
        return Err(GlmError::LengthMismatch {
            expected: probabilities.len(),
            found: labels.len(),
        });
    }
    if probabilities.is_empty() {
        return Err(GlmError::Empty);
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(GlmError::InvalidThreshold(threshold));
    }
    let (mut tn, mut fp, mut fn_, mut tp) = (0, 0, 0, 0);
    for (&p, &y) in probabilities.iter().zip(labels) {
        match (p.to_f64_lossless() >= threshold, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let n = labels.len();
    let mut zero_division = false;
    let precision = ratio(tp, tp + fp, &mut zero_division);
    let recall = ratio(tp, tp + fn_, &mut zero_division);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        zero_division = true;
        0.0
    };
    let auc = roc_auc(probabilities, labels);
    Ok(EvalReport {
        accuracy: (tp + tn) as f64 / n as f64,
        precision,
        recall,
        f1,
        roc_auc: auc.unwrap_or(0.5),
        tn,
        fp,
        fn_,
        tp,
        n,
        zero_division,
        single_class: auc.is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_ranking() {
        let r = evaluate(&[0.9, 0.8, 0.3, 0.2], &[true, true, false, false], 0.5).unwrap();
        assert_eq!((r.accuracy, r.roc_auc), (1.0, 1.0));
        assert_eq!((r.tn, r.fp, r.fn_, r.tp), (2, 0, 0, 2));
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn ties_give_half() {
        let r = evaluate(&[0.5; 4], &[true, false, true, false], 0.5).unwrap();
        assert_eq!(r.roc_auc, 0.5);
        assert_eq!((r.tp, r.fp), (2, 2));
    }

    #[test]
    fn pair_counting_example() {
        assert_eq!(roc_auc(&[0.9, 0.4, 0.8, 0.2], &[true, false, false, true]), Some(0.5));
    }

    #[test]
    fn degenerate_cases() {
        let r = evaluate(&[0.1, 0.2], &[false, false], 0.5).unwrap();
        assert!(r.single_class && r.zero_division);
        assert_eq!((r.roc_auc, r.precision, r.recall, r.f1), (0.5, 0.0, 0.0, 0.0));
        assert!(matches!(evaluate::<f64>(&[], &[], 0.5), Err(GlmError::Empty)));
        assert!(evaluate(&[0.1], &[true], 1.0).is_err());
    }
}
