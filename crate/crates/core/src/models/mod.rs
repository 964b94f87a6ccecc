//! Inter-distance distributions between consecutive vehicles.
//!
//! Three families are supported: exponential (Poisson traffic), finite
//! hyperexponential mixtures, and an empirical distribution backed by observed
//! gaps. Parametric models also expose a density, which the renewal solver
//! needs.

mod em;
mod text;

pub use em::{fit_hyperexponential, EmConfig, HyperexpFit};
pub use text::{read_samples, write_samples};

use crate::error::{invalid, Error, Result};
use crate::rng::open01;
use rand::Rng;

/// Tolerance on the sum of mixture weights.
const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Exponential { rate: f64 },
    Hyperexponential { weights: Vec<f64>, rates: Vec<f64> },
    /// Sorted observed gaps.
    Empirical { samples: Vec<f64> },
}

/// A validated inter-distance distribution on `[0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterdistanceModel {
    kind: ModelKind,
}

/// CDF and, for parametric models, density at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eval {
    pub cdf: f64,
    pub pdf: Option<f64>,
}

fn check_rate(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("rate must be finite and positive, got {r}")))
    }
}

impl InterdistanceModel {
    pub fn exponential(rate: f64) -> Result<Self> {
        check_rate(rate)?;
        Ok(Self { kind: ModelKind::Exponential { rate } })
    }

    /// Exponential model with the given mean gap.
    pub fn exponential_mean(mean: f64) -> Result<Self> {
        Self::exponential(1.0 / mean)
    }

    pub fn hyperexponential(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != rates.len() {
            return Err(invalid("hyperexponential needs as many weights as rates, at least one"));
        }
        for &w in &weights {
            if !(w.is_finite() && w >= 0.0) {
                return Err(invalid(format!("mixture weights must be nonnegative, got {w}")));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(invalid(format!("mixture weights sum to {sum}, not 1")));
        }
        for &r in &rates {
            check_rate(r)?;
        }
        Ok(Self { kind: ModelKind::Hyperexponential { weights, rates } })
    }

    /// Hyperexponential model parameterised by component means.
    pub fn hyperexponential_means(weights: Vec<f64>, means: &[f64]) -> Result<Self> {
        Self::hyperexponential(weights, means.iter().map(|m| 1.0 / m).collect())
    }

    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("empirical model needs at least one gap".into()));
        }
        if samples.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(invalid("empirical gaps must be finite and nonnegative"));
        }
        if samples.iter().all(|&x| x == 0.0) {
            return Err(invalid("empirical gaps are all zero"));
        }
        samples.sort_by(|a, b| a.total_cmp(b));
        Ok(Self { kind: ModelKind::Empirical { samples } })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Mixture weights and rates; an exponential is a one-component mixture.
    pub fn mixture(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.kind {
            ModelKind::Exponential { rate } => Some((vec![1.0], vec![*rate])),
            ModelKind::Hyperexponential { weights, rates } => Some((weights.clone(), rates.clone())),
            ModelKind::Empirical { .. } => None,
        }
    }

    pub fn has_density(&self) -> bool {
        !matches!(self.kind, ModelKind::Empirical { .. })
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return match &self.kind {
                ModelKind::Empirical { samples } => {
                    let le = samples.partition_point(|&s| s <= x);
                    1.0 - le as f64 / samples.len() as f64
                }
                _ => 1.0,
            };
        }
        match &self.kind {
            ModelKind::Exponential { rate } => (-rate * x).exp(),
            ModelKind::Hyperexponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, r)| w * (-r * x).exp()).sum()
            }
            ModelKind::Empirical { samples } => {
                let le = samples.partition_point(|&s| s <= x);
                (samples.len() - le) as f64 / samples.len() as f64
            }
        }
    }

    /// Natural log of the survival function, accurate far in the tail.
    pub fn log_survival(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match &self.kind {
            ModelKind::Exponential { rate } => -rate * x,
            ModelKind::Hyperexponential { weights, rates } => {
                let top = weights
                    .iter()
                    .zip(rates)
                    .map(|(w, r)| w.ln() - r * x)
                    .fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = weights.iter().zip(rates).map(|(w, r)| (w.ln() - r * x - top).exp()).sum();
                top + s.ln()
            }
            ModelKind::Empirical { .. } => self.survival(x).ln(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.kind {
            ModelKind::Exponential { rate } if x > 0.0 => -(-rate * x).exp_m1(),
            _ => 1.0 - self.survival(x),
        }
    }

    /// Density, unavailable for empirical models.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        if x < 0.0 {
            return if self.has_density() { Some(0.0) } else { None };
        }
        match &self.kind {
            ModelKind::Exponential { rate } => Some(rate * (-rate * x).exp()),
            ModelKind::Hyperexponential { weights, rates } => {
                Some(weights.iter().zip(rates).map(|(w, r)| w * r * (-r * x).exp()).sum())
            }
            ModelKind::Empirical { .. } => None,
        }
    }

    pub fn eval(&self, x: f64) -> Eval {
        Eval { cdf: self.cdf(x), pdf: self.pdf(x) }
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            ModelKind::Exponential { rate } => 1.0 / rate,
            ModelKind::Hyperexponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, r)| w / r).sum()
            }
            ModelKind::Empirical { samples } => samples.iter().sum::<f64>() / samples.len() as f64,
        }
    }

    /// Squared coefficient of variation.
    pub fn scv(&self) -> f64 {
        let m = self.mean();
        let second = match &self.kind {
            ModelKind::Exponential { rate } => 2.0 / (rate * rate),
            ModelKind::Hyperexponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, r)| 2.0 * w / (r * r)).sum()
            }
            ModelKind::Empirical { samples } => {
                samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64
            }
        };
        second / (m * m) - 1.0
    }

    /// `lambda_m = alpha_2 lambda_1 + alpha_1 lambda_2` of a two-component
    /// mixture, the decay rate of its renewal density.
    pub fn lambda_m(&self) -> Option<f64> {
        match &self.kind {
            ModelKind::Hyperexponential { weights, rates } if weights.len() == 2 => {
                Some(weights[1] * rates[0] + weights[0] * rates[1])
            }
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            ModelKind::Exponential { rate } => -open01(rng).ln() / rate,
            ModelKind::Hyperexponential { weights, rates } => {
                let i = pick(weights, rng.gen::<f64>());
                -open01(rng).ln() / rates[i]
            }
            ModelKind::Empirical { samples } => samples[rng.gen_range(0..samples.len())],
        }
    }

    /// Draws a gap conditioned to exceed `a`.
    pub fn sample_above<R: Rng + ?Sized>(&self, a: f64, rng: &mut R) -> Result<f64> {
        let a = a.max(0.0);
        match &self.kind {
            ModelKind::Exponential { rate } => Ok(a - open01(rng).ln() / rate),
            ModelKind::Hyperexponential { weights, rates } => {
                // Posterior component weights given the gap exceeds a, then memorylessness.
                let post: Vec<f64> = weights.iter().zip(rates).map(|(w, r)| w * (-r * a).exp()).collect();
                let tot: f64 = post.iter().sum();
                let i = pick(&post, rng.gen::<f64>() * tot);
                Ok(a - open01(rng).ln() / rates[i])
            }
            ModelKind::Empirical { samples } => {
                let start = samples.partition_point(|&s| s <= a);
                if start == samples.len() {
                    return Err(invalid(format!("no empirical gap exceeds {a}")));
                }
                Ok(samples[rng.gen_range(start..samples.len())])
            }
        }
    }

    /// Smallest `x` with `log_survival(x) <= log_s`, for parametric models.
    pub(crate) fn inverse_log_survival(&self, log_s: f64) -> f64 {
        if log_s >= 0.0 {
            return 0.0;
        }
        match &self.kind {
            ModelKind::Exponential { rate } => -log_s / rate,
            ModelKind::Hyperexponential { rates, .. } => {
                let slow = rates.iter().cloned().fold(f64::INFINITY, f64::min);
                let mut hi = -log_s / slow;
                while self.log_survival(hi) > log_s {
                    hi *= 2.0;
                }
                let tol = 1e-12 * hi.max(1.0);
                crate::invert::invert_nondecreasing(|x| -self.log_survival(x), -log_s, 0.0, hi, tol)
            }
            ModelKind::Empirical { samples } => {
                let n = samples.len() as f64;
                let need = ((1.0 - log_s.exp()) * n).ceil() as usize;
                samples[need.clamp(1, samples.len()) - 1]
            }
        }
    }
}

fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // Rounding left u past the total; take the last component that can occur.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Named models used throughout the examples and the command line.
pub mod presets {
    use super::InterdistanceModel;

    /// Trace fit at 8 h: weights (0.92, 0.08), means 12.1534 m and 40.4655 m.
    pub fn f8h() -> InterdistanceModel {
        InterdistanceModel::hyperexponential_means(vec![0.92, 0.08], &[12.1534, 40.4655]).unwrap()
    }

    /// Trace fit at 11 h.
    pub fn f11h() -> InterdistanceModel {
        InterdistanceModel::hyperexponential_means(vec![0.8100133, 0.1899867], &[16.20606, 44.4476])
            .unwrap()
    }

    /// Burstiness family sharing a mean gap of 15.65 m, from most to least bursty.
    pub fn burst_a() -> InterdistanceModel {
        InterdistanceModel::hyperexponential_means(vec![0.95, 0.05], &[14.2, 43.2]).unwrap()
    }

    pub fn burst_b() -> InterdistanceModel {
        InterdistanceModel::hyperexponential_means(vec![0.90, 0.10], &[14.2, 28.7]).unwrap()
    }

    pub fn burst_c() -> InterdistanceModel {
        InterdistanceModel::hyperexponential_means(vec![0.05, 0.95], &[14.2, (15.65 - 0.05 * 14.2) / 0.95])
            .unwrap()
    }

    /// Intermediate member with weights (0.8, 0.2).
    pub fn burst_d() -> InterdistanceModel {
        InterdistanceModel::hyperexponential_means(vec![0.8, 0.2], &[14.2, 21.45]).unwrap()
    }

    pub fn by_name(name: &str) -> Option<InterdistanceModel> {
        Some(match name {
            "f8h" => f8h(),
            "f11h" => f11h(),
            "burst-a" => burst_a(),
            "burst-b" => burst_b(),
            "burst-c" => burst_c(),
            "burst-d" => burst_d(),
            _ => return None,
        })
    }

    pub const NAMES: [&str; 6] = ["f8h", "f11h", "burst-a", "burst-b", "burst-c", "burst-d"];
}
