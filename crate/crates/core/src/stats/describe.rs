//! Descriptive helpers shared by the statistics and partition code.

use crate::scalar::{total_cmp, Scalar};

/// Sum in ascending order; the result does not depend on input order.
pub fn stable_sum<T: Scalar>(values: &[T]) -> T {
    let mut v = values.to_vec();
    v.sort_by(|a, b| total_cmp(a, b));
    v.into_iter().sum()
}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<T: Scalar>(values: &[T]) -> Option<T> {
    (!values.is_empty()).then(|| stable_sum(values) / T::from_count(values.len()))
}

/// Sample variance (divisor n - 1); `None` for fewer than two values.
pub fn sample_variance<T: Scalar>(values: &[T]) -> Option<T> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let sq: Vec<T> = values.iter().map(|&x| (x - m) * (x - m)).collect();
    Some(stable_sum(&sq) / T::from_count(values.len() - 1))
}

/// Quantile of an ascending-sorted slice by linear interpolation between
/// order statistics (Hyndman-Fan type 7). `p` is in [0, 1].
pub fn quantile_sorted<T: Scalar>(sorted: &[T], p: f64) -> Option<T> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = T::lit(h - lo as f64);
    Some(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Type-7 quantile of an unsorted sample.
pub fn quantile<T: Scalar>(values: &[T], p: f64) -> Option<T> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| total_cmp(a, b));
    quantile_sorted(&v, p)
}

/// Median with the midpoint rule for even counts.
pub fn median<T: Scalar>(values: &[T]) -> Option<T> {
    quantile(values, 0.5)
}
