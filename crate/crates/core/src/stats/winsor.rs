use super::describe::quantile_sorted;
use super::StatsError;
use crate::scalar::{total_cmp, Scalar};

pub const DEFAULT_LOWER_PCT: f64 = 5.0;
pub const DEFAULT_UPPER_PCT: f64 = 95.0;

/// Clamps values below the `lower_pct` percentile up to it and values above
/// the `upper_pct` percentile down to it (type-7 percentiles). Order and
/// length are preserved. `lower_pct = 0` leaves the lower tail alone.
pub fn winsorize<T: Scalar>(sample: &[T], lower_pct: f64, upper_pct: f64) -> Result<Vec<T>, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if !(0.0..100.0).contains(&lower_pct) || !(lower_pct < upper_pct && upper_pct <= 100.0) {
        return Err(StatsError::InvalidPercentiles {
            lower: lower_pct,
            upper: upper_pct,
        });
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| total_cmp(a, b));
    let lo = quantile_sorted(&sorted, lower_pct / 100.0).expect("non-empty");
    let hi = quantile_sorted(&sorted, upper_pct / 100.0).expect("non-empty");
    Ok(sample.iter().map(|&x| x.max(lo).min(hi)).collect())
}
