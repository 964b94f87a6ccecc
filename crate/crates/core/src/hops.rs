//! Distribution of `N_b`, the number of nodes on the shortest path across a
//! connected component.
//!
//! `N_b = k` is the event `τ_1, …, τ_{k-1} ≤ R, τ_k > R` of the relay-gap
//! chain. It is estimated for any [`RelayKernel`] by simulating the chain, or
//! for small `k` by propagating cell probabilities on a grid.

use crate::error::{invalid, Error, Result};
use crate::kernel::RelayKernel;
use crate::rng::substream;
use rand::Rng;
use rayon::prelude::*;

pub const DEFAULT_K_MAX: usize = 1024;
/// Largest tail mass for which [`HopDistribution::mean_hops`] is meaningful.
pub const MAX_TAIL_FOR_MEAN: f64 = 1e-3;
const CHAINS_PER_TASK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HopMethod {
    MonteCarlo { n_samples: u64, seed: u64 },
    Quadrature { grid_step: f64 },
    PoissonRecurrence,
    PoissonClosedForm,
}

/// Truncated pmf of `N_b`: `pmf[k-1] = P(N_b = k)` for `k = 1..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct HopDistribution {
    pub pmf: Vec<f64>,
    /// `P(N_b > k_max)`.
    pub tail_mass: f64,
    pub method: HopMethod,
    /// Per-k standard error, Monte-Carlo only.
    pub stderr: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanHops {
    /// `Σ k P(N_b = k)` over `k ≤ k_max`.
    pub mean: f64,
    pub stderr: Option<f64>,
    pub tail_mass: f64,
    /// Lower bound on the omitted tail contribution, `(k_max + 1) · tail_mass`.
    pub tail_contribution_lower_bound: f64,
}

impl HopDistribution {
    pub fn k_max(&self) -> usize {
        self.pmf.len()
    }

    /// `P(N_b = k)`, zero outside `1..=k_max`.
    pub fn p(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.pmf.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn mean_hops(&self) -> Result<MeanHops> {
        if self.tail_mass > MAX_TAIL_FOR_MEAN {
            return Err(Error::TruncationDominated { tail_mass: self.tail_mass });
        }
        let mean: f64 = self.pmf.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum();
        let stderr = match self.method {
            HopMethod::MonteCarlo { n_samples, .. } => {
                let second: f64 = self.pmf.iter().enumerate().map(|(i, p)| ((i + 1) as f64).powi(2) * p).sum();
                Some(((second - mean * mean).max(0.0) / n_samples as f64).sqrt())
            }
            _ => None,
        };
        Ok(MeanHops {
            mean,
            stderr,
            tail_mass: self.tail_mass,
            tail_contribution_lower_bound: (self.k_max() + 1) as f64 * self.tail_mass,
        })
    }
}

/// Runs one chain; returns `N_b`, or `None` once it passes `k_max`.
fn chain<R: Rng>(kernel: &RelayKernel, k_max: usize, rng: &mut R) -> Option<usize> {
    let radius = kernel.radius();
    let mut a = 0.0;
    for k in 1..=k_max {
        let u = crate::rng::open01(rng);
        match kernel.step_from_uniform(a, u) {
            None => return Some(k),
            Some(tau) => a = (radius - tau).max(0.0),
        }
    }
    None
}

/// Counts of `N_b = k` (index `k-1`) and of chains beyond `k_max` (last slot)
/// for samples `range` of the stream family `seed`.
fn count_chains(kernel: &RelayKernel, k_max: usize, seed: u64, range: std::ops::Range<u64>) -> Vec<u64> {
    let mut counts = vec![0u64; k_max + 1];
    for i in range {
        let mut rng = substream(seed, i);
        match chain(kernel, k_max, &mut rng) {
            Some(k) => counts[k - 1] += 1,
            None => counts[k_max] += 1,
        }
    }
    counts
}

/// Monte-Carlo pmf from `n_samples` independent chains. Sample `i` uses
/// stream `i` of `seed`, so the result is the same under any thread count.
pub fn hop_pmf_montecarlo(kernel: &RelayKernel, n_samples: u64, k_max: usize, seed: u64) -> Result<HopDistribution> {
    if n_samples < 10_000 {
        return Err(invalid(format!("need at least 10^4 chains, got {n_samples}")));
    }
    if k_max == 0 {
        return Err(invalid("k_max must be at least 1"));
    }
    let tasks = n_samples.div_ceil(CHAINS_PER_TASK);
    let counts = (0..tasks)
        .into_par_iter()
        .map(|t| {
            let lo = t * CHAINS_PER_TASK;
            count_chains(kernel, k_max, seed, lo..(lo + CHAINS_PER_TASK).min(n_samples))
        })
        .reduce(
            || vec![0u64; k_max + 1],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let n = n_samples as f64;
    let pmf: Vec<f64> = counts[..k_max].iter().map(|&c| c as f64 / n).collect();
    let stderr = pmf.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
    Ok(HopDistribution {
        pmf,
        tail_mass: counts[k_max] as f64 / n,
        method: HopMethod::MonteCarlo { n_samples, seed },
        stderr: Some(stderr),
    })
}

/// Largest `k` accepted by the quadrature.
pub const QUADRATURE_K_MAX: usize = 5;

/// Deterministic pmf for `k ≤ k_max ≤ 5` by propagating the law of the
/// current relay gap over cells of width about `grid_step` on `[0, R]`.
///
/// Cell masses come from differencing the kernel CDFs at the cell edges, and
/// each cell is represented by its midpoint when conditioning the next step.
/// Mass is conserved, so `Σ pmf + tail_mass = 1` up to rounding.
pub fn hop_distribution_quadrature(kernel: &RelayKernel, k_max: usize, grid_step: f64) -> Result<HopDistribution> {
    if !(1..=QUADRATURE_K_MAX).contains(&k_max) {
        return Err(invalid(format!("quadrature supports 1 <= k <= {QUADRATURE_K_MAX}, got {k_max}")));
    }
    let radius = kernel.radius();
    if !(grid_step > 0.0 && grid_step <= radius) {
        return Err(invalid(format!("grid step must lie in (0, R], got {grid_step}")));
    }
    let cells = (radius / grid_step - 1e-9).ceil().max(1.0) as usize;
    let h = radius / cells as f64;
    let edges: Vec<f64> = (0..=cells).map(|j| j as f64 * h).collect();
    let mids: Vec<f64> = (0..cells).map(|j| (j as f64 + 0.5) * h).collect();

    let mut pmf = Vec::with_capacity(k_max);
    pmf.push(1.0 - kernel.tau1_cdf(radius)?);
    // mass[c] = P(τ_1..τ_k ≤ R, τ_k in cell c).
    let mut mass = Vec::with_capacity(cells);
    let mut prev = 0.0;
    for &e in &edges[1..] {
        let v = kernel.tau1_cdf(e)?;
        mass.push((v - prev).max(0.0));
        prev = v;
    }
    let exit: Vec<f64> = mids.iter().map(|&y| kernel.exit_probability(y)).collect::<Result<_>>()?;
    for _ in 2..=k_max {
        pmf.push(mass.iter().zip(&exit).map(|(m, e)| m * e).sum());
        let rows: Vec<Vec<f64>> = mids
            .par_iter()
            .zip(&mass)
            .map(|(&y, &m)| {
                let mut row = vec![0.0; cells];
                if m == 0.0 {
                    return Ok(row);
                }
                let first = ((radius - y) / h).floor() as usize;
                let mut prev = kernel.tau_cond_cdf(y, edges[first])?;
                for c in first..cells {
                    let v = kernel.tau_cond_cdf(y, edges[c + 1])?;
                    row[c] = m * (v - prev).max(0.0);
                    prev = v;
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        let mut next = vec![0.0; cells];
        for row in rows {
            next.iter_mut().zip(&row).for_each(|(a, b)| *a += b);
        }
        mass = next;
    }
    let tail = mass.iter().sum::<f64>();
    Ok(HopDistribution { pmf, tail_mass: tail, method: HopMethod::Quadrature { grid_step: h }, stderr: None })
}

/// `P(N_b = k)` by quadrature, `1 ≤ k ≤ 5`.
pub fn hop_pmf_quadrature(kernel: &RelayKernel, k: usize, grid_step: f64) -> Result<f64> {
    Ok(hop_distribution_quadrature(kernel, k, grid_step)?.pmf[k - 1])
}
