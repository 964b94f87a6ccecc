//! Monte-Carlo evaluation of the nested integral `𝔐_{α,k}`.
//!
//! `u_1 ~ U(0,1)` and `u_i ~ U(1-u_{i-1}, 1)`; each draw is weighted by the
//! inverse proposal density `Π_{i≥2} u_{i-1}` times the integrand.

use super::PoissonParams;
use crate::error::{invalid, Result};
use crate::rng::{open01, substream};
use crate::stats::{Estimate, Moments};
use rayon::prelude::*;

pub type OracleEstimate = Estimate;

const MAX_ALPHA: usize = 6;
const MAX_K: usize = 8;
const CHUNK: u64 = 1 << 16;

fn check(alpha: usize, k: usize, n_samples: u64) -> Result<()> {
    if alpha > MAX_ALPHA || k > MAX_K {
        return Err(invalid(format!("oracle supports α ≤ {MAX_ALPHA}, k ≤ {MAX_K}; got α={alpha}, k={k}")));
    }
    if n_samples < 2 {
        return Err(invalid("oracle needs at least two samples"));
    }
    Ok(())
}

/// Runs `n_samples` chains of length `k_max` and hands each chain's
/// `(prefix weights w_1..w_k, u_1..u_k)` to `visit`.
fn run<F>(params: &PoissonParams, k_max: usize, n_samples: u64, seed: u64, cells: usize, visit: F) -> Vec<Moments>
where
    F: Fn(&[f64], &[f64], &mut [Moments]) + Sync,
{
    let lp = params.lambda_prime();
    let rho = params.rho();
    let chunks = n_samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c);
            let mut acc = vec![Moments::default(); cells];
            let mut w = vec![0.0; k_max + 1];
            let mut u = vec![0.0; k_max + 1];
            let n = CHUNK.min(n_samples - c * CHUNK);
            for _ in 0..n {
                let mut weight = 1.0;
                let mut prev = 1.0;
                for i in 1..=k_max {
                    let lo = 1.0 - prev;
                    let ui = lo + (1.0 - lo) * open01(&mut rng);
                    weight *= rho * (lp * ui).exp() * prev;
                    u[i] = ui;
                    w[i] = weight;
                    prev = ui;
                }
                visit(&w, &u, &mut acc);
            }
            acc
        })
        .reduce(
            || vec![Moments::default(); cells],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| x.merge(y));
                a
            },
        )
}

/// `𝔐_{α,k}` by Monte Carlo; `𝔐_{α,0} = 1` exactly.
pub fn m_alpha_k_oracle(
    params: &PoissonParams,
    alpha: usize,
    k: usize,
    n_samples: u64,
    seed: u64,
) -> Result<OracleEstimate> {
    check(alpha, k, n_samples)?;
    if k == 0 {
        return Ok(Estimate { value: 1.0, stderr: 0.0 });
    }
    let acc = run(params, k, n_samples, seed, 1, |w, u, acc| {
        acc[0].push(w[k] * u[k].powi(alpha as i32));
    });
    Ok(acc[0].estimate())
}

/// Every `𝔐_{α,k}` with `α ≤ alpha_max`, `k ≤ k_max` from one set of chains,
/// indexed `[k][α]`. Estimates in the grid are correlated.
pub fn m_alpha_k_oracle_grid(
    params: &PoissonParams,
    alpha_max: usize,
    k_max: usize,
    n_samples: u64,
    seed: u64,
) -> Result<Vec<Vec<OracleEstimate>>> {
    check(alpha_max, k_max, n_samples)?;
    let width = alpha_max + 1;
    let acc = run(params, k_max, n_samples, seed, width * (k_max + 1), |w, u, acc| {
        for k in 1..=k_max {
            let mut p = w[k];
            for a in 0..width {
                acc[k * width + a].push(p);
                p *= u[k];
            }
        }
    });
    Ok((0..=k_max)
        .map(|k| {
            (0..width)
                .map(|a| if k == 0 { Estimate { value: 1.0, stderr: 0.0 } } else { acc[k * width + a].estimate() })
                .collect()
        })
        .collect())
}
