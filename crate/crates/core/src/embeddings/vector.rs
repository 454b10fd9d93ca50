use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum VectorError {
    #[error("vector lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
}

fn check_len<T>(a: &[T], b: &[T]) -> Result<(), VectorError> {
    if a.len() != b.len() {
        return Err(VectorError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Euclidean distance without the length check.
pub(crate) fn distance_unchecked<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| {
            let d = x - y;
            acc + d * d
        })
        .sqrt()
}

/// Cosine from precomputed norms, clamped to [-1, 1].
pub(crate) fn cosine_with_norms<T: Scalar>(a: &[T], b: &[T], na: T, nb: T) -> T {
    (dot(a, b) / (na * nb)).max(-T::one()).min(T::one())
}

pub fn euclidean_distance<T: Scalar>(a: &[T], b: &[T]) -> Result<T, VectorError> {
    check_len(a, b)?;
    Ok(distance_unchecked(a, b))
}

pub fn cosine_similarity<T: Scalar>(a: &[T], b: &[T]) -> Result<T, VectorError> {
    check_len(a, b)?;
    let (na, nb) = (norm(a), norm(b));
    if na == T::zero() || nb == T::zero() {
        return Err(VectorError::ZeroVector);
    }
    Ok(cosine_with_norms(a, b, na, nb))
}
