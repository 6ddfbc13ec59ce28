//! Diagonal-covariance Gaussian mixtures trained by expectation-maximisation.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VARIANCE_FLOOR: f64 = 1e-6;

/// Training stops once the per-sample log-likelihood gain drops below this.
pub const CONVERGENCE_PER_SAMPLE: f64 = 1e-6;

const KMEANS_ITERATIONS: usize = 25;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GmmError {
    #[error("need at least {needed} samples for {components} components, got {got}")]
    TooFewSamples {
        needed: usize,
        got: usize,
        components: usize,
    },
    #[error("all training samples are identical")]
    Degenerate,
    #[error("component count must be at least 1")]
    NoComponents,
    #[error("sample {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("model is malformed: {0}")]
    Malformed(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl GmmModel {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dimension(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// Checks shape, weight normalisation and the variance floor.
    pub fn validate(&self) -> Result<(), GmmError> {
        let k = self.weights.len();
        if k == 0 {
            return Err(GmmError::NoComponents);
        }
        if self.means.len() != k || self.variances.len() != k {
            return Err(GmmError::Malformed("component arrays differ in length"));
        }
        let d = self.dimension();
        if d == 0
            || self.means.iter().any(|m| m.len() != d)
            || self.variances.iter().any(|v| v.len() != d)
        {
            return Err(GmmError::Malformed("inconsistent feature dimension"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(GmmError::Malformed("negative weight"));
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(GmmError::Malformed("weights do not sum to one"));
        }
        if self
            .variances
            .iter()
            .flatten()
            .any(|v| !(*v >= VARIANCE_FLOOR * (1.0 - 1e-12)))
        {
            return Err(GmmError::Malformed("variance below floor"));
        }
        Ok(())
    }

    fn component_log_density(&self, c: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((&xi, &m), &v) in x.iter().zip(&self.means[c]).zip(&self.variances[c]) {
            let d = xi - m;
            acc += (2.0 * PI * v).ln() + d * d / v;
        }
        -0.5 * acc
    }

    /// `ln p(x)` under the mixture.
    pub fn log_likelihood(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..self.components())
            .map(|c| self.weights[c].ln() + self.component_log_density(c, x))
            .collect();
        log_sum_exp(&terms)
    }

    pub fn total_log_likelihood(&self, samples: &[Vec<f64>]) -> f64 {
        samples.iter().map(|x| self.log_likelihood(x)).sum()
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Total log-likelihood of the data before each M-step, in order, plus
    /// the value for the returned model.
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn check_samples(samples: &[Vec<f64>], k: usize) -> Result<usize, GmmError> {
    if k == 0 {
        return Err(GmmError::NoComponents);
    }
    let needed = 10 * k;
    if samples.len() < needed {
        return Err(GmmError::TooFewSamples {
            needed,
            got: samples.len(),
            components: k,
        });
    }
    let d = samples[0].len();
    if d == 0 {
        return Err(GmmError::DimensionMismatch {
            index: 0,
            expected: 1,
            got: 0,
        });
    }
    for (index, s) in samples.iter().enumerate() {
        if s.len() != d {
            return Err(GmmError::DimensionMismatch {
                index,
                expected: d,
                got: s.len(),
            });
        }
    }
    if samples.iter().all(|s| s == &samples[0]) {
        return Err(GmmError::Degenerate);
    }
    Ok(d)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Seeded k-means++ followed by Lloyd iterations; returns cluster labels.
fn kmeans(samples: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = samples.len();
    let mut centres: Vec<Vec<f64>> = Vec::with_capacity(k);
    centres.push(samples[rng.gen_range(0..n)].clone());
    let mut nearest: Vec<f64> = samples.iter().map(|s| sq_dist(s, &centres[0])).collect();
    while centres.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut pick = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        centres.push(samples[next].clone());
        let c = centres.last().expect("just pushed");
        for (d, s) in nearest.iter_mut().zip(samples) {
            *d = d.min(sq_dist(s, c));
        }
    }

    let dim = samples[0].len();
    let mut labels = vec![0usize; n];
    for _ in 0..KMEANS_ITERATIONS {
        let mut changed = false;
        for (label, s) in labels.iter_mut().zip(samples) {
            let mut best = (0, f64::INFINITY);
            for (c, centre) in centres.iter().enumerate() {
                let d = sq_dist(s, centre);
                if d < best.1 {
                    best = (c, d);
                }
            }
            if *label != best.0 {
                *label = best.0;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&l, s) in labels.iter().zip(samples) {
            counts[l] += 1;
            for (acc, x) in sums[l].iter_mut().zip(s) {
                *acc += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (m, s) in centres[c].iter_mut().zip(&sums[c]) {
                    *m = s / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

/// Weighted mean and (biased) variance per dimension, from responsibilities.
fn m_step(samples: &[Vec<f64>], resp: &[Vec<f64>], k: usize) -> GmmModel {
    let n = samples.len();
    let dim = samples[0].len();
    let mut weights = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    for c in 0..k {
        let nk: f64 = resp.iter().map(|r| r[c]).sum();
        let mut mean = vec![0.0; dim];
        let mut var = vec![0.0; dim];
        if nk > 0.0 {
            for (r, x) in resp.iter().zip(samples) {
                for (m, xi) in mean.iter_mut().zip(x) {
                    *m += r[c] * xi;
                }
            }
            for m in mean.iter_mut() {
                *m /= nk;
            }
            for (r, x) in resp.iter().zip(samples) {
                for ((v, xi), m) in var.iter_mut().zip(x).zip(&mean) {
                    let d = xi - m;
                    *v += r[c] * d * d;
                }
            }
            for v in var.iter_mut() {
                *v = (*v / nk).max(VARIANCE_FLOOR);
            }
        } else {
            var.iter_mut().for_each(|v| *v = VARIANCE_FLOOR);
        }
        weights.push(nk / n as f64);
        means.push(mean);
        variances.push(var);
    }
    // keep the sum at one despite rounding
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    GmmModel {
        weights,
        means,
        variances,
    }
}

/// E-step: responsibilities and total log-likelihood of `model`.
fn e_step(model: &GmmModel, samples: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let k = model.components();
    let mut total = 0.0;
    let resp = samples
        .iter()
        .map(|x| {
            let terms: Vec<f64> = (0..k)
                .map(|c| model.weights[c].ln() + model.component_log_density(c, x))
                .collect();
            let norm = log_sum_exp(&terms);
            total += norm;
            terms.iter().map(|t| (t - norm).exp()).collect()
        })
        .collect();
    (resp, total)
}

/// Fits a `k`-component diagonal mixture, initialised from seeded k-means.
pub fn train_gmm(
    samples: &[Vec<f64>],
    k: usize,
    max_iters: usize,
    seed: u64,
) -> Result<(GmmModel, TrainReport), GmmError> {
    check_samples(samples, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = kmeans(samples, k, &mut rng);
    let hard: Vec<Vec<f64>> = labels
        .iter()
        .map(|&l| {
            let mut r = vec![0.0; k];
            r[l] = 1.0;
            r
        })
        .collect();
    let mut model = m_step(samples, &hard, k);
    let mut log_likelihoods = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let n = samples.len() as f64;
    let (mut resp, mut ll) = e_step(&model, samples);
    log_likelihoods.push(ll);
    while iterations < max_iters {
        model = m_step(samples, &resp, k);
        iterations += 1;
        let (next_resp, next_ll) = e_step(&model, samples);
        log_likelihoods.push(next_ll);
        let gain = (next_ll - ll) / n;
        resp = next_resp;
        ll = next_ll;
        if gain < CONVERGENCE_PER_SAMPLE {
            converged = true;
            break;
        }
    }
    Ok((
        model,
        TrainReport {
            log_likelihoods,
            iterations,
            converged,
        },
    ))
}
