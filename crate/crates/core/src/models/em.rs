//! Maximum-likelihood fitting of exponential mixtures by EM.

use super::InterdistanceModel;
use crate::error::{invalid, Error, Result};
use rand::seq::SliceRandom;
use rayon::prelude::*;

/// Below this, a mixture weight is treated as a vanished component.
const DEAD_WEIGHT: f64 = 1e-12;
const CHUNK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop once the relative log-likelihood change falls below this.
    pub tol: f64,
    /// Seeds the optional subsample.
    pub seed: u64,
    /// Fit on a random subsample of at most this many gaps.
    pub max_samples: Option<usize>,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self { max_iter: 2000, tol: 1e-8, seed: 0, max_samples: None }
    }
}

#[derive(Debug, Clone)]
pub struct HyperexpFit {
    pub model: InterdistanceModel,
    /// Log-likelihood after initialisation and after each EM iteration.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Fits a `k`-component exponential mixture to `samples`.
///
/// Initial rates come from a k-means split of the log-gaps and the weights
/// start uniform. `k = 1` is the closed-form MLE.
pub fn fit_hyperexponential(samples: &[f64], k: usize, config: &EmConfig) -> Result<HyperexpFit> {
    if k == 0 {
        return Err(invalid("mixture needs at least one component"));
    }
    if samples.len() < 100 {
        return Err(invalid(format!("need at least 100 samples, got {}", samples.len())));
    }
    if samples.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(invalid("samples must be finite and nonnegative"));
    }
    let first = samples[0];
    if samples.iter().all(|&x| x == first) {
        return Err(Error::FitFailure("all samples are equal".into()));
    }
    let data: Vec<f64> = match config.max_samples {
        Some(cap) if cap < samples.len() => {
            let mut rng = crate::rng::substream(config.seed, 0);
            samples.choose_multiple(&mut rng, cap).cloned().collect()
        }
        _ => samples.to_vec(),
    };
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    if k == 1 {
        let model = InterdistanceModel::exponential(1.0 / mean)?;
        let ll = log_likelihood(&data, &[1.0], &[1.0 / mean]);
        return Ok(HyperexpFit { model, log_likelihood: vec![ll], iterations: 0, converged: true });
    }

    let mut rates = kmeans_rates(&data, k, mean);
    let mut weights = vec![1.0 / k as f64; k];
    let mut trace = vec![log_likelihood(&data, &weights, &rates)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        let (resp, resp_x) = e_step(&data, &weights, &rates);
        let n = data.len() as f64;
        for j in 0..k {
            weights[j] = resp[j] / n;
            if resp[j] > 0.0 && resp_x[j] > 0.0 {
                rates[j] = resp[j] / resp_x[j];
            }
        }
        let ll = log_likelihood(&data, &weights, &rates);
        let prev = trace[trace.len() - 1];
        trace.push(ll);
        if ((ll - prev) / prev.abs().max(f64::MIN_POSITIVE)).abs() < config.tol {
            converged = true;
            break;
        }
    }

    let mut w = Vec::new();
    let mut r = Vec::new();
    for j in 0..k {
        if weights[j] > DEAD_WEIGHT && rates[j].is_finite() && rates[j] > 0.0 {
            w.push(weights[j]);
            r.push(rates[j]);
        }
    }
    if w.is_empty() {
        return Err(Error::FitFailure("every mixture component vanished".into()));
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    // Sort by decreasing rate so the short-gap component comes first.
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&a, &b| r[b].total_cmp(&r[a]));
    let model = InterdistanceModel::hyperexponential(
        idx.iter().map(|&i| w[i]).collect(),
        idx.iter().map(|&i| r[i]).collect(),
    )?;
    Ok(HyperexpFit { model, log_likelihood: trace, iterations, converged })
}

/// Log of each weighted component density at `x`, and their log-sum.
#[inline]
fn log_terms(x: f64, lw: &[f64], rates: &[f64], out: &mut [f64]) -> f64 {
    let mut top = f64::NEG_INFINITY;
    for j in 0..rates.len() {
        out[j] = lw[j] - rates[j] * x;
        top = top.max(out[j]);
    }
    let s: f64 = out.iter().map(|t| (t - top).exp()).sum();
    top + s.ln()
}

fn log_weights(weights: &[f64], rates: &[f64]) -> Vec<f64> {
    weights.iter().zip(rates).map(|(w, r)| w.ln() + r.ln()).collect()
}

pub(crate) fn log_likelihood(data: &[f64], weights: &[f64], rates: &[f64]) -> f64 {
    let lw = log_weights(weights, rates);
    let parts: Vec<f64> = data
        .par_chunks(CHUNK)
        .map(|c| {
            let mut buf = vec![0.0; rates.len()];
            c.iter().map(|&x| log_terms(x, &lw, rates, &mut buf)).sum::<f64>()
        })
        .collect();
    parts.iter().sum()
}

/// Per component, the summed responsibilities and responsibility-weighted gaps.
fn e_step(data: &[f64], weights: &[f64], rates: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = rates.len();
    let lw = log_weights(weights, rates);
    let parts: Vec<(Vec<f64>, Vec<f64>)> = data
        .par_chunks(CHUNK)
        .map(|c| {
            let mut buf = vec![0.0; k];
            let (mut r, mut rx) = (vec![0.0; k], vec![0.0; k]);
            for &x in c {
                let lse = log_terms(x, &lw, rates, &mut buf);
                for j in 0..k {
                    let p = (buf[j] - lse).exp();
                    r[j] += p;
                    rx[j] += p * x;
                }
            }
            (r, rx)
        })
        .collect();
    let (mut r, mut rx) = (vec![0.0; k], vec![0.0; k]);
    for (a, b) in parts {
        for j in 0..k {
            r[j] += a[j];
            rx[j] += b[j];
        }
    }
    (r, rx)
}

/// One-dimensional k-means on log-gaps; returns one rate per cluster.
fn kmeans_rates(data: &[f64], k: usize, mean: f64) -> Vec<f64> {
    let floor = 1e-6 * mean;
    let mut logs: Vec<f64> = data.iter().map(|&x| x.max(floor).ln()).collect();
    logs.sort_by(|a, b| a.total_cmp(b));
    let n = logs.len();
    let mut centers: Vec<f64> =
        (0..k).map(|j| logs[(((j as f64 + 0.5) / k as f64) * n as f64) as usize]).collect();
    // Sorted data: clusters are contiguous, described by k-1 boundaries.
    let mut bounds = vec![0usize; k + 1];
    for _ in 0..100 {
        bounds[0] = 0;
        bounds[k] = n;
        for j in 1..k {
            let mid = 0.5 * (centers[j - 1] + centers[j]);
            bounds[j] = logs.partition_point(|&v| v < mid).max(bounds[j - 1]);
        }
        let mut moved = false;
        for j in 0..k {
            let (lo, hi) = (bounds[j], bounds[j + 1]);
            if hi > lo {
                let c = logs[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
                moved |= c != centers[j];
                centers[j] = c;
            }
        }
        if !moved {
            break;
        }
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    (0..k)
        .map(|j| {
            let (lo, hi) = (bounds[j], bounds[j + 1]);
            let m = if hi > lo {
                sorted[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            } else {
                centers[j].exp()
            };
            1.0 / m.max(floor)
        })
        .collect()
}
