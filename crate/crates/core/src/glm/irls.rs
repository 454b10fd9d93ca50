use serde::{Deserialize, Serialize};

use super::GlmError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlmConfig {
    pub max_iter: usize,
    /// Convergence when the largest coefficient change falls below this.
    pub tol: f64,
    /// Bound on |standardized coefficient|; reaching it marks separation.
    pub coef_cap: f64,
}

impl Default for GlmConfig {
    fn default() -> Self {
        GlmConfig {
            max_iter: 100,
            tol: 1e-8,
            coef_cap: 30.0,
        }
    }
}

/// Logistic regression fit on z-scored features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmFit<T> {
    /// Intercept followed by one coefficient per feature, standardized scale.
    /// Features with zero variance keep a zero coefficient.
    pub coefficients: Vec<T>,
    /// Per-feature (mean, sd) used for standardization; sd 0 marks a
    /// dropped feature.
    pub standardization: Vec<(T, T)>,
    pub converged: bool,
    /// Set when a coefficient reached the cap or the information matrix
    /// became singular, the usual signs of (quasi-)complete separation.
    pub separated: bool,
    pub iterations: usize,
    pub log_likelihood: T,
}

/// `ln(1 + e^x)` without overflow.
fn softplus<T: Scalar>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

/// Logistic function clamped to `[eps, 1 - eps]` so probabilities stay
/// strictly inside (0, 1).
pub(crate) fn logistic<T: Scalar>(x: T) -> T {
    let p = if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    };
    let eps = T::epsilon();
    p.max(eps).min(T::one() - eps)
}

/// Solves `a x = b` for a small dense system by Gaussian elimination with
/// partial pivoting. `None` when the matrix is numerically singular.
fn solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |m, v| m.max(v.abs()));
    let tiny = scale * T::epsilon() * T::lit(1e3);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(a[pivot][col].abs() > tiny) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

fn log_likelihood<T: Scalar>(design: &[Vec<T>], y: &[T], beta: &[T]) -> T {
    design
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let eta = dot(row, beta);
            yi * eta - softplus(eta)
        })
        .sum()
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Maximum-likelihood logistic regression with an intercept, fit by
/// iteratively reweighted least squares (Newton steps with step halving).
pub fn fit_logistic<T: Scalar>(
    features: &[Vec<T>],
    labels: &[bool],
    config: &GlmConfig,
) -> Result<GlmFit<T>, GlmError> {
    let n = features.len();
    if n != labels.len() {
        return Err(GlmError::LengthMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    let k = features.first().map_or(0, |r| r.len());
    if let Some(bad) = features.iter().find(|r| r.len() != k) {
        return Err(GlmError::LengthMismatch {
            expected: k,
            found: bad.len(),
        });
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(GlmError::NonFinite);
    }
    if n < k + 1 {
        return Err(GlmError::TooFewRows { n, k });
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == n {
        return Err(GlmError::SingleClass);
    }

    let nt = T::from_count(n);
    let standardization: Vec<(T, T)> = (0..k)
        .map(|j| {
            let mean = features.iter().map(|r| r[j]).sum::<T>() / nt;
            let var = features.iter().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<T>() / nt;
            let sd = var.sqrt();
            // relative test so near-constant columns count as constant
            if sd <= mean.abs() * T::epsilon() * T::lit(16.0) {
                (mean, T::zero())
            } else {
                (mean, sd)
            }
        })
        .collect();
    let active: Vec<usize> = (0..k).filter(|&j| standardization[j].1 > T::zero()).collect();
    let design: Vec<Vec<T>> = features
        .iter()
        .map(|r| {
            std::iter::once(T::one())
                .chain(active.iter().map(|&j| (r[j] - standardization[j].0) / standardization[j].1))
                .collect()
        })
        .collect();
    let y: Vec<T> = labels.iter().map(|&l| if l { T::one() } else { T::zero() }).collect();
    let p = design[0].len();
    let cap = T::lit(config.coef_cap);
    let tol = T::lit(config.tol);

    let mut beta = vec![T::zero(); p];
    let mut ll = log_likelihood(&design, &y, &beta);
    let mut converged = false;
    let mut separated = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        let mut info = vec![vec![T::zero(); p]; p];
        let mut grad = vec![T::zero(); p];
        for (row, &yi) in design.iter().zip(&y) {
            let mu = logistic(dot(row, &beta));
            let w = mu * (T::one() - mu);
            let r = yi - mu;
            for a in 0..p {
                grad[a] += row[a] * r;
                for b in a..p {
                    info[a][b] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                info[a][b] = info[b][a];
            }
        }
        let Some(step) = solve(info, grad) else {
            separated = true;
            break;
        };
        let mut t = T::one();
        let mut candidate;
        let mut cand_ll;
        let mut halvings = 0;
        loop {
            candidate = beta
                .iter()
                .zip(&step)
                .map(|(&b, &s)| (b + t * s).max(-cap).min(cap))
                .collect::<Vec<T>>();
            cand_ll = log_likelihood(&design, &y, &candidate);
            if cand_ll >= ll || halvings >= 30 {
                break;
            }
            t *= T::lit(0.5);
            halvings += 1;
        }
        let change = beta
            .iter()
            .zip(&candidate)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        beta = candidate;
        ll = cand_ll;
        if beta.iter().any(|b| b.abs() >= cap) {
            separated = true;
            break;
        }
        if change < tol {
            converged = true;
            break;
        }
    }
    if separated {
        log::debug!("logistic fit hit separation after {iterations} iterations");
    }

    let mut coefficients = vec![T::zero(); k + 1];
    coefficients[0] = beta[0];
    for (slot, &j) in active.iter().enumerate() {
        coefficients[j + 1] = beta[slot + 1];
    }
    Ok(GlmFit {
        coefficients,
        standardization,
        converged,
        separated,
        iterations,
        log_likelihood: ll,
    })
}

impl<T: Scalar> GlmFit<T> {
    pub fn n_features(&self) -> usize {
        self.standardization.len()
    }

    /// Linear predictor on the standardized scale.
    pub fn linear_predictor(&self, row: &[T]) -> Result<T, GlmError> {
        if row.len() != self.n_features() {
            return Err(GlmError::LengthMismatch {
                expected: self.n_features(),
                found: row.len(),
            });
        }
        let mut eta = self.coefficients[0];
        for (j, (&x, &(mean, sd))) in row.iter().zip(&self.standardization).enumerate() {
            if sd > T::zero() {
                eta += self.coefficients[j + 1] * (x - mean) / sd;
            }
        }
        Ok(eta)
    }

    /// Coefficients on the original feature scale (intercept first).
    pub fn raw_coefficients(&self) -> Vec<T> {
        let mut out = vec![self.coefficients[0]];
        for (j, &(mean, sd)) in self.standardization.iter().enumerate() {
            if sd > T::zero() {
                let b = self.coefficients[j + 1] / sd;
                out[0] -= b * mean;
                out.push(b);
            } else {
                out.push(T::zero());
            }
        }
        out
    }
}

/// Predicted probability for one row, strictly inside (0, 1).
pub fn predict<T: Scalar>(fit: &GlmFit<T>, row: &[T]) -> Result<T, GlmError> {
    Ok(logistic(fit.linear_predictor(row)?))
}
