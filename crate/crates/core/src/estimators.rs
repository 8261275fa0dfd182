//! Estimators of the maximum expected value `max_i E[X_i]`.
//!
//! Every estimator here works from one realization of per-variable sample
//! means: the full-sample means `mu_hat` and two disjoint half-sample means
//! `mu_hat_a` / `mu_hat_b`. The single estimator overestimates, the double
//! estimator underestimates, and clipping the double estimator by the single
//! estimator pushes the bias further down. The action-candidate variant
//! restricts the selection step to the `K` indices with the largest
//! `mu_hat_b`, which trades between the two regimes as `K` moves from `N`
//! down to `1`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::EstimatorError;

type Result<T> = std::result::Result<T, EstimatorError>;

/// Picks one index out of a set of indices that tie for the maximum.
pub trait TieBreaker {
    /// `tied` is nonempty and sorted ascending.
    fn pick(&mut self, tied: &[usize]) -> usize;
}

/// Uniformly random choice among tied indices.
pub struct RandomTie<'a, R: Rng + ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> TieBreaker for RandomTie<'_, R> {
    fn pick(&mut self, tied: &[usize]) -> usize {
        if tied.len() == 1 {
            tied[0]
        } else {
            tied[self.0.random_range(0..tied.len())]
        }
    }
}

/// Deterministic choice of the smallest tied index.
#[derive(Debug, Default, Clone, Copy)]
pub struct LowestIndex;

impl TieBreaker for LowestIndex {
    fn pick(&mut self, tied: &[usize]) -> usize {
        tied[0]
    }
}

pub fn sample_mean(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(EstimatorError::EmptySampleSet);
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Samples of every variable, divided into two disjoint subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSampleSet {
    per_variable: Vec<(Vec<f64>, Vec<f64>)>,
}

impl SplitSampleSet {
    pub fn new(per_variable: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        if per_variable.len() < 2 {
            return Err(EstimatorError::TooFewVariables(per_variable.len()));
        }
        for (index, (a, b)) in per_variable.iter().enumerate() {
            if a.is_empty() || b.is_empty() {
                return Err(EstimatorError::UnsplittableVariable {
                    index,
                    len: a.len() + b.len(),
                });
            }
        }
        Ok(Self { per_variable })
    }

    pub fn len(&self) -> usize {
        self.per_variable.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_variable.is_empty()
    }

    pub fn variables(&self) -> &[(Vec<f64>, Vec<f64>)] {
        &self.per_variable
    }

    /// Computes `mu_hat`, `mu_hat_a` and `mu_hat_b`.
    pub fn triple(&self) -> EstimateTriple {
        let n = self.per_variable.len();
        let mut mu_hat = Vec::with_capacity(n);
        let mut mu_hat_a = Vec::with_capacity(n);
        let mut mu_hat_b = Vec::with_capacity(n);
        for (a, b) in &self.per_variable {
            let sum_a: f64 = a.iter().sum();
            let sum_b: f64 = b.iter().sum();
            mu_hat.push((sum_a + sum_b) / (a.len() + b.len()) as f64);
            mu_hat_a.push(sum_a / a.len() as f64);
            mu_hat_b.push(sum_b / b.len() as f64);
        }
        EstimateTriple {
            mu_hat,
            mu_hat_a,
            mu_hat_b,
        }
    }
}

/// Randomly permutes each variable's samples and halves them. The first
/// subset receives `ceil(n / 2)` samples.
pub fn split_samples<R: Rng + ?Sized>(
    per_variable_samples: &[Vec<f64>],
    rng: &mut R,
) -> Result<SplitSampleSet> {
    if per_variable_samples.len() < 2 {
        return Err(EstimatorError::TooFewVariables(per_variable_samples.len()));
    }
    let mut split = Vec::with_capacity(per_variable_samples.len());
    for (index, samples) in per_variable_samples.iter().enumerate() {
        if samples.len() < 2 {
            return Err(EstimatorError::UnsplittableVariable {
                index,
                len: samples.len(),
            });
        }
        let mut shuffled = samples.clone();
        shuffled.shuffle(rng);
        let b = shuffled.split_off(shuffled.len().div_ceil(2));
        split.push((shuffled, b));
    }
    Ok(SplitSampleSet {
        per_variable: split,
    })
}

/// Full-sample and half-sample mean vectors for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTriple {
    mu_hat: Vec<f64>,
    mu_hat_a: Vec<f64>,
    mu_hat_b: Vec<f64>,
}

impl EstimateTriple {
    pub fn new(mu_hat: Vec<f64>, mu_hat_a: Vec<f64>, mu_hat_b: Vec<f64>) -> Result<Self> {
        let (a, b, c) = (mu_hat.len(), mu_hat_a.len(), mu_hat_b.len());
        if a != b || b != c {
            return Err(EstimatorError::LengthMismatch { a, b, c });
        }
        if a < 2 {
            return Err(EstimatorError::TooFewVariables(a));
        }
        Ok(Self {
            mu_hat,
            mu_hat_a,
            mu_hat_b,
        })
    }

    pub fn len(&self) -> usize {
        self.mu_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu_hat.is_empty()
    }

    pub fn mu_hat(&self) -> &[f64] {
        &self.mu_hat
    }

    pub fn mu_hat_a(&self) -> &[f64] {
        &self.mu_hat_a
    }

    pub fn mu_hat_b(&self) -> &[f64] {
        &self.mu_hat_b
    }

    fn single(&self) -> f64 {
        max_of(&self.mu_hat)
    }
}

/// The four estimates computed on one trial, plus the true maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    pub single: f64,
    pub double: f64,
    pub clipped_double: f64,
    pub ac_clipped_double: f64,
    pub k: usize,
    pub true_max: f64,
}

impl EstimateReport {
    pub fn compute<R: Rng + ?Sized>(
        triple: &EstimateTriple,
        k: usize,
        true_max: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let single = triple.single();
        // one selection draw shared by the double and clipped double estimates
        let double = double_estimate(triple, rng);
        Ok(Self {
            single,
            double,
            clipped_double: double.min(single),
            ac_clipped_double: ac_clipped_double_estimate(triple, k, rng)?,
            k,
            true_max,
        })
    }
}

pub(crate) fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn single_estimate(mu_hat: &[f64]) -> Result<f64> {
    if mu_hat.len() < 2 {
        return Err(EstimatorError::TooFewVariables(mu_hat.len()));
    }
    Ok(max_of(mu_hat))
}

pub fn argmax_random_tiebreak<R: Rng + ?Sized>(
    values: &[f64],
    allowed_indices: &[usize],
    rng: &mut R,
) -> Result<usize> {
    argmax_with(values, allowed_indices, &mut RandomTie(rng))
}

/// Index in `allowed_indices` maximizing `values`, ties resolved by `ties`.
pub fn argmax_with<T: TieBreaker + ?Sized>(
    values: &[f64],
    allowed_indices: &[usize],
    ties: &mut T,
) -> Result<usize> {
    if allowed_indices.is_empty() {
        return Err(EstimatorError::EmptyAllowedSet);
    }
    let mut best = f64::NEG_INFINITY;
    let mut tied: Vec<usize> = Vec::new();
    for &i in allowed_indices {
        let v = *values.get(i).ok_or(EstimatorError::IndexOutOfRange {
            index: i,
            len: values.len(),
        })?;
        if v > best || tied.is_empty() {
            best = v;
            tied.clear();
            tied.push(i);
        } else if v == best {
            tied.push(i);
        }
    }
    tied.sort_unstable();
    Ok(ties.pick(&tied))
}

/// Argmax over all indices; never fails for nonempty input.
pub(crate) fn argmax_all<T: TieBreaker + ?Sized>(values: &[f64], ties: &mut T) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut tied: Vec<usize> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if v > best || tied.is_empty() {
            best = v;
            tied.clear();
            tied.push(i);
        } else if v == best {
            tied.push(i);
        }
    }
    ties.pick(&tied)
}

pub fn double_estimate<R: Rng + ?Sized>(triple: &EstimateTriple, rng: &mut R) -> f64 {
    let a_star = argmax_all(&triple.mu_hat_a, &mut RandomTie(rng));
    triple.mu_hat_b[a_star]
}

pub fn clipped_double_estimate<R: Rng + ?Sized>(triple: &EstimateTriple, rng: &mut R) -> f64 {
    double_estimate(triple, rng).min(triple.single())
}

/// Indices of the `k` largest values, ascending. Ties at the `k`-th rank go
/// to the lowest index.
pub fn candidate_set(mu_hat_b: &[f64], k: usize) -> Result<Vec<usize>> {
    let n = mu_hat_b.len();
    if k == 0 || k > n {
        return Err(EstimatorError::InvalidCandidateCount { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps lower indices first among equal values
    order.sort_by(|&i, &j| mu_hat_b[j].total_cmp(&mu_hat_b[i]));
    order.truncate(k);
    order.sort_unstable();
    Ok(order)
}

/// Selected index `a_K*`: argmax of `mu_hat_a` restricted to the top-`k`
/// candidates of `mu_hat_b`.
pub fn ac_candidate_index<T: TieBreaker + ?Sized>(
    triple: &EstimateTriple,
    k: usize,
    ties: &mut T,
) -> Result<usize> {
    let candidates = candidate_set(&triple.mu_hat_b, k)?;
    argmax_with(&triple.mu_hat_a, &candidates, ties)
}

/// `min(mu_hat_b[a_K*], max_i mu_hat[i])` using an explicit tie rule.
pub fn ac_clipped_double_with<T: TieBreaker + ?Sized>(
    triple: &EstimateTriple,
    k: usize,
    ties: &mut T,
) -> Result<f64> {
    let a_k = ac_candidate_index(triple, k, ties)?;
    Ok(triple.mu_hat_b[a_k].min(triple.single()))
}

pub fn ac_clipped_double_estimate<R: Rng + ?Sized>(
    triple: &EstimateTriple,
    k: usize,
    rng: &mut R,
) -> Result<f64> {
    ac_clipped_double_with(triple, k, &mut RandomTie(rng))
}

/// Upper bound on the expected single estimate:
/// `mu_star + sqrt((N - 1) / N * sum(variances))`.
pub fn single_estimator_upper_bound(mu_star: f64, variances: &[f64]) -> Result<f64> {
    let n = variances.len();
    if n < 2 {
        return Err(EstimatorError::TooFewVariables(n));
    }
    if let Some((index, &value)) = variances
        .iter()
        .enumerate()
        .find(|(_, v)| v.is_nan() || **v < 0.0)
    {
        return Err(EstimatorError::NegativeVariance { index, value });
    }
    let total: f64 = variances.iter().sum();
    Ok(mu_star + ((n as f64 - 1.0) / n as f64 * total).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasStats {
    pub mean_bias: f64,
    pub bias_squared: f64,
}

pub fn bias_stats(estimates: &[f64], true_maxes: &[f64]) -> Result<BiasStats> {
    if estimates.len() != true_maxes.len() {
        return Err(EstimatorError::BiasLengthMismatch {
            estimates: estimates.len(),
            truths: true_maxes.len(),
        });
    }
    if estimates.is_empty() {
        return Err(EstimatorError::EmptySampleSet);
    }
    let mean_bias = estimates
        .iter()
        .zip(true_maxes)
        .map(|(e, t)| e - t)
        .sum::<f64>()
        / estimates.len() as f64;
    Ok(BiasStats {
        mean_bias,
        bias_squared: mean_bias * mean_bias,
    })
}
