use super::StatsError;
use crate::scalar::{total_cmp, Scalar};

/// Benjamini-Hochberg step-up adjustment, returned in input order.
pub fn bh_fdr<T: Scalar>(p_values: &[T]) -> Result<Vec<T>, StatsError> {
    for &p in p_values {
        if !(p > T::zero() && p <= T::one()) {
            return Err(StatsError::InvalidPValue(p.to_f64_lossless()));
        }
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| total_cmp(&p_values[a], &p_values[b]));
    let mut adjusted = vec![T::zero(); m];
    let mut running = T::one();
    for (rank, &i) in order.iter().enumerate().rev() {
        let adj = p_values[i] * T::from_count(m) / T::from_count(rank + 1);
        running = running.min(adj);
        adjusted[i] = running;
    }
    Ok(adjusted)
}
