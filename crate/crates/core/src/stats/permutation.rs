use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::describe::stable_sum;
use super::StatsError;
use crate::scalar::Scalar;

pub const DEFAULT_PERMUTATIONS: usize = 10_000;
/// Largest number of label assignments enumerated in exhaustive mode.
pub const MAX_EXHAUSTIVE: u128 = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    G1Greater,
    G2Greater,
    TwoSided,
}

impl Alternative {
    pub fn name(self) -> &'static str {
        match self {
            Alternative::G1Greater => "g1_greater",
            Alternative::G2Greater => "g2_greater",
            Alternative::TwoSided => "two_sided",
        }
    }
}

impl std::str::FromStr for Alternative {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Alternative::G1Greater, Alternative::G2Greater, Alternative::TwoSided]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown alternative {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationMode {
    /// Random relabelings; p = (1 + extreme) / (1 + n_perm).
    MonteCarlo { n_perm: usize, seed: u64 },
    /// Every assignment of labels; p = extreme / total.
    Exhaustive,
}

/// Decides whether a relabeled group-1 sum is at least as extreme as the
/// observed one. The statistic mean(s1) - mean(s2) is affine in the group-1
/// sum, so the one-sided cases compare sums directly.
struct Extremity<T> {
    alternative: Alternative,
    observed_sum: T,
    total: T,
    n1: T,
    n2: T,
    tol: T,
}

impl<T: Scalar> Extremity<T> {
    fn stat(&self, sum1: T) -> T {
        sum1 / self.n1 - (self.total - sum1) / self.n2
    }

    fn is_extreme(&self, sum1: T) -> bool {
        match self.alternative {
            Alternative::G1Greater => sum1 >= self.observed_sum - self.tol,
            Alternative::G2Greater => sum1 <= self.observed_sum + self.tol,
            Alternative::TwoSided => {
                let scale = T::one() / self.n1 + T::one() / self.n2;
                self.stat(sum1).abs() >= self.stat(self.observed_sum).abs() - self.tol * scale
            }
        }
    }
}

/// Permutation test of the difference in means between two samples.
pub fn permutation_test_means<T: Scalar>(
    s1: &[T],
    s2: &[T],
    mode: PermutationMode,
    alternative: Alternative,
) -> Result<T, StatsError> {
    if s1.is_empty() || s2.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let pooled: Vec<T> = s1.iter().chain(s2).copied().collect();
    let scale = pooled.iter().fold(T::zero(), |acc, x| acc + x.abs());
    let ext = Extremity {
        alternative,
        observed_sum: stable_sum(s1),
        total: stable_sum(&pooled),
        n1: T::from_count(s1.len()),
        n2: T::from_count(s2.len()),
        // absorbs summation-order rounding so ties are counted as ties
        tol: T::epsilon() * T::lit(64.0) * scale.max(T::one()),
    };
    match mode {
        PermutationMode::MonteCarlo { n_perm, seed } => {
            if n_perm == 0 {
                return Err(StatsError::NoPermutations);
            }
            Ok(monte_carlo(pooled, s1.len(), n_perm, seed, &ext))
        }
        PermutationMode::Exhaustive => exhaustive(&pooled, s1.len(), &ext),
    }
}

fn monte_carlo<T: Scalar>(mut pooled: Vec<T>, n1: usize, n_perm: usize, seed: u64, ext: &Extremity<T>) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pooled.len();
    let mut extreme = 0usize;
    for _ in 0..n_perm {
        // partial Fisher-Yates: the first n1 slots become a uniform n1-subset
        for i in 0..n1 {
            let j = rng.random_range(i..n);
            pooled.swap(i, j);
        }
        if ext.is_extreme(pooled[..n1].iter().copied().sum()) {
            extreme += 1;
        }
    }
    T::from_count(1 + extreme) / T::from_count(1 + n_perm)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i + 1) as u128,
            None => return u128::MAX,
        }
    }
    acc
}

fn exhaustive<T: Scalar>(pooled: &[T], n1: usize, ext: &Extremity<T>) -> Result<T, StatsError> {
    let n = pooled.len();
    let total = binomial(n, n1);
    if total > MAX_EXHAUSTIVE {
        return Err(StatsError::TooManyPermutations(total));
    }
    let mut idx: Vec<usize> = (0..n1).collect();
    let mut extreme = 0u128;
    loop {
        if ext.is_extreme(idx.iter().map(|&i| pooled[i]).sum()) {
            extreme += 1;
        }
        // next combination in lexicographic order
        let mut i = n1;
        loop {
            if i == 0 {
                return Ok(T::lit(extreme as f64 / total as f64));
            }
            i -= 1;
            if idx[i] < n - n1 + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..n1 {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
