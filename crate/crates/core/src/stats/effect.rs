use super::describe::{mean, sample_variance};
use super::StatsError;
use crate::scalar::Scalar;

/// Hedges' g (absolute value) with pooled sample variance and the
/// small-sample factor `1 - 3 / (4 (n1 + n2) - 9)`.
pub fn hedges_g<T: Scalar>(s1: &[T], s2: &[T]) -> Result<T, StatsError> {
    let (n1, n2) = (s1.len(), s2.len());
    if n1 == 0 || n2 == 0 || n1 + n2 < 3 {
        return Err(StatsError::TooFewObservations { n1, n2 });
    }
    let var = |s: &[T]| sample_variance(s).unwrap_or_else(T::zero);
    let df = T::from_count(n1 + n2 - 2);
    let pooled =
        (T::from_count(n1 - 1) * var(s1) + T::from_count(n2 - 1) * var(s2)) / df;
    if !(pooled > T::zero()) {
        return Err(StatsError::ZeroVariance);
    }
    let n = T::from_count(n1 + n2);
    let four = T::lit(4.0);
    // (4N - 12) / (4N - 9) keeps exact cases exact, e.g. N = 6 gives 12/15
    let j = (four * n - T::lit(12.0)) / (four * n - T::lit(9.0));
    let d = (mean(s1).unwrap() - mean(s2).unwrap()) / pooled.sqrt();
    Ok((j * d).abs())
}
