//! Exact results for Poisson traffic (exponential gaps).
//!
//! With `λ' = λR`, `ρ' = e^{-λ'}` and `ρ = λ'ρ'`, the hop-count pmf is
//! `P(N_b=1) = ρ'`, `P(N_b=2) = ρ` and `P(N_b=k) = ρ 𝔐_{1,k-2}` for `k ≥ 3`,
//! where
//!
//! ```text
//! 𝔐_{α,k} = ∫_0^1 ∫_{1-u_1}^1 … ∫_{1-u_{k-1}}^1 ρ^k u_k^α Π_i e^{λ'u_i} du_k … du_1,   𝔐_{α,0} = 1.
//! ```
//!
//! `𝔐_{0,k} = P(N_b > k)`. Integrating by parts gives two recurrences that
//! fill the table from the seed columns `k = 1, 2`. The α-recurrence divides
//! by `λ'` once per step, losing about `log2(α!/λ'^α)` bits, so the tables are
//! computed with MPFR at a precision chosen from that bound.

mod oracle;
mod series;
mod transform;

pub use oracle::{m_alpha_k_oracle, m_alpha_k_oracle_grid, OracleEstimate};
pub use series::{
    a_even, a_odd, identity_sums, m1_series, series_coeffs, IdentitySums, SeriesCoefficients, SERIES_MAX_TERMS,
};
pub use transform::{
    factorial_moment, m1_closed_form, m1_closed_form_variant, mean_hops_closed, mean_hops_radical,
    mean_hops_trig, pgf_coefficients, q_transform, q_transform_variant, ClosedFormVariant, MeanBranch,
};

use crate::error::{invalid, Error, Result};
use crate::hops::{HopDistribution, HopMethod};
use crate::mp::log2_amplification;
use rug::Float;

/// `λ' = λR` and the derived `ρ' = e^{-λ'}`, `ρ = λ'ρ'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonParams {
    lambda_prime: f64,
    rho_prime: f64,
    rho: f64,
}

impl PoissonParams {
    pub fn new(lambda_prime: f64) -> Result<Self> {
        if !(lambda_prime.is_finite() && lambda_prime > 0.0) {
            return Err(invalid(format!("λ' must be finite and positive, got {lambda_prime}")));
        }
        let rho_prime = (-lambda_prime).exp();
        Ok(Self { lambda_prime, rho_prime, rho: lambda_prime * rho_prime })
    }

    /// From a vehicle density `rate` (1/m) and coverage radius (m).
    pub fn from_rate(rate: f64, radius: f64) -> Result<Self> {
        Self::new(rate * radius)
    }

    pub fn lambda_prime(&self) -> f64 {
        self.lambda_prime
    }

    pub fn rho_prime(&self) -> f64 {
        self.rho_prime
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `λ'`, `ρ'` and `ρ` at precision `prec`.
    pub(crate) fn mp(&self, prec: u32) -> (Float, Float, Float) {
        let l = Float::with_val(prec, self.lambda_prime);
        let rp = Float::with_val(prec, -&l).exp();
        let r = Float::with_val(prec, &l * &rp);
        (l, rp, r)
    }
}

/// Which printed form of the `k = 2` seed to use.
///
/// The printed `𝔐_{α,2}` divides its last term by `λ'` where `λ'^α` is
/// needed; [`SeedVariant::Corrected`] uses `λ'^α`, which is what
/// `𝔐_{α,2} = 𝔐_{α,1} - ρ/(α+1)` (and the quadrature oracle) require.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedVariant {
    #[default]
    Corrected,
    AsPrinted,
}

/// Working precision (bits) for tables reaching `alpha_max`.
pub(crate) fn table_precision(lambda_prime: f64, alpha_max: usize) -> u32 {
    let lost = log2_amplification(lambda_prime, alpha_max + 2);
    // 53 bits of output, a guard of 64, and the worst-case loss counted twice
    // because errors made deep in one column are amplified again in the next.
    (53.0 + 64.0 + 2.0 * lost).ceil() as u32
}

/// The seed columns `(𝔐_{α,1}, 𝔐_{α,2})` for `α = 0..=alpha_max`, at `prec` bits.
pub(crate) fn seed_columns_mp(
    params: &PoissonParams,
    alpha_max: usize,
    variant: SeedVariant,
    prec: u32,
) -> (Vec<Float>, Vec<Float>) {
    let (l, rp, r) = params.mp(prec);
    let mut c1 = Vec::with_capacity(alpha_max + 1);
    let mut c2 = Vec::with_capacity(alpha_max + 1);
    for alpha in 0..=alpha_max {
        // t_i = (-1)^i α!/((α-i)! λ'^i)
        let mut t = Float::with_val(prec, 1);
        let mut sum = Float::with_val(prec, 1);
        for i in 1..=alpha {
            t *= -((alpha - i + 1) as f64);
            t /= &l;
            sum += &t;
        }
        // t is now (-1)^α α!/λ'^α.
        let m1 = Float::with_val(prec, &sum - Float::with_val(prec, &t * &rp));
        let last = match variant {
            SeedVariant::Corrected => Float::with_val(prec, &t * &rp),
            SeedVariant::AsPrinted => {
                // (-1)^α α! ρ'/λ'
                let mut fact = Float::with_val(prec, 1);
                for i in 2..=alpha {
                    fact *= i as f64;
                }
                if alpha % 2 == 1 {
                    fact = -fact;
                }
                Float::with_val(prec, &fact * &rp) / &l
            }
        };
        let m2 = sum - Float::with_val(prec, &r / ((alpha + 1) as f64)) - last;
        c1.push(m1);
        c2.push(m2);
    }
    (c1, c2)
}

/// `(𝔐_{α,1}, 𝔐_{α,2})` from the closed-form seeds.
pub fn seed_row_m(params: &PoissonParams, alpha: usize, variant: SeedVariant) -> (f64, f64) {
    let prec = table_precision(params.lambda_prime, alpha);
    let (c1, c2) = seed_columns_mp(params, alpha, variant, prec);
    (c1[alpha].to_f64(), c2[alpha].to_f64())
}

/// `𝔐_{α,k}` and `u_{α,k} = λ'^α/α! 𝔐_{α,k}`.
///
/// Column `k` is stored for `α ≤ alpha_max - ⌊(k-1)/2⌋`, the cells the
/// recurrence can reach; column 0 is the convention `𝔐_{α,0} = 1`.
#[derive(Debug, Clone)]
pub struct AnalyticTables {
    params: PoissonParams,
    alpha_max: usize,
    k_max: usize,
    precision: u32,
    m: Vec<Vec<f64>>,
    u: Vec<Vec<f64>>,
}

impl AnalyticTables {
    pub fn params(&self) -> &PoissonParams {
        &self.params
    }

    pub fn alpha_max(&self) -> usize {
        self.alpha_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Bits of working precision used to fill the table.
    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Highest stored α in column `k`.
    pub fn depth(&self, k: usize) -> Option<usize> {
        self.m.get(k).map(|c| c.len() - 1)
    }

    pub fn m(&self, alpha: usize, k: usize) -> Option<f64> {
        self.m.get(k)?.get(alpha).copied()
    }

    pub fn u(&self, alpha: usize, k: usize) -> Option<f64> {
        self.u.get(k)?.get(alpha).copied()
    }

    /// Largest residual of the two recurrences over every stored cell with
    /// `k ≥ 2`, traversed α-major (the opposite of the fill order). Returns
    /// `(residual of the 𝔐_{0,k} recurrence, residual of the 𝔐_{α,k} one)`.
    pub fn recurrence_residuals(&self) -> (f64, f64) {
        let (lp, rho) = (self.params.lambda_prime, self.params.rho);
        let mut r0: f64 = 0.0;
        let mut ra: f64 = 0.0;
        for alpha in 0..=self.alpha_max {
            for k in 2..=self.k_max {
                let Some(v) = self.m(alpha, k) else { continue };
                if alpha == 0 {
                    let rhs = self.m(0, k - 1).unwrap() - rho * self.m(1, k - 2).unwrap();
                    r0 = r0.max((v - rhs).abs());
                } else if let Some(up) = self.m(alpha + 1, k - 2) {
                    let rhs = self.m(0, k - 1).unwrap()
                        - alpha as f64 / lp * self.m(alpha - 1, k).unwrap()
                        - rho * up / (alpha + 1) as f64;
                    ra = ra.max((v - rhs).abs());
                }
            }
        }
        (r0, ra)
    }

    /// `P(N_b = k)` for `1 ≤ k ≤ k_max + 2`.
    pub fn pmf(&self, k: usize) -> Option<f64> {
        match k {
            0 => None,
            1 => Some(self.params.rho_prime),
            2 => Some(self.params.rho),
            _ => Some(self.params.rho * self.m(1, k - 2)?),
        }
    }
}

/// Fills `𝔐_{α,k}` for `k ≤ k_max` with the default seeds.
pub fn build_tables(params: &PoissonParams, alpha_max: usize, k_max: usize) -> Result<AnalyticTables> {
    build_tables_with(params, alpha_max, k_max, SeedVariant::Corrected)
}

pub fn build_tables_with(
    params: &PoissonParams,
    alpha_max: usize,
    k_max: usize,
    variant: SeedVariant,
) -> Result<AnalyticTables> {
    build_tables_at(params, alpha_max, k_max, variant, table_precision(params.lambda_prime, alpha_max))
}

pub(crate) fn build_tables_at(
    params: &PoissonParams,
    alpha_max: usize,
    k_max: usize,
    variant: SeedVariant,
    prec: u32,
) -> Result<AnalyticTables> {
    if k_max == 0 {
        return Err(invalid("k_max must be at least 1"));
    }
    if (alpha_max as f64) < k_max as f64 / 2.0 + 2.0 {
        return Err(Error::TableUnderflow { alpha_max, k_max });
    }
    let (l, _, rho) = params.mp(prec);
    let (c1, c2) = seed_columns_mp(params, alpha_max, variant, prec);
    let depth = |k: usize| if k == 0 { alpha_max + 1 } else { alpha_max - (k - 1) / 2 };

    let mut cols: Vec<Vec<Float>> = Vec::with_capacity(k_max + 1);
    cols.push(vec![Float::with_val(prec, 1); depth(0) + 1]);
    cols.push(c1);
    if k_max >= 2 {
        cols.push(c2.into_iter().take(depth(2) + 1).collect());
    }
    for k in 3..=k_max {
        let d = depth(k);
        let mut col: Vec<Float> = Vec::with_capacity(d + 1);
        let prev0 = cols[k - 1][0].clone();
        col.push(Float::with_val(prec, &prev0 - Float::with_val(prec, &rho * &cols[k - 2][1])));
        for alpha in 1..=d {
            let mut v = prev0.clone();
            v -= Float::with_val(prec, &col[alpha - 1] * alpha as f64) / &l;
            v -= Float::with_val(prec, &rho * &cols[k - 2][alpha + 1]) / (alpha + 1) as f64;
            col.push(v);
        }
        cols.push(col);
    }
    let cols: Vec<Vec<Float>> = cols.into_iter().take(k_max + 1).collect();

    // u = λ'^α/α! 𝔐
    let mut weight = Vec::with_capacity(alpha_max + 2);
    let mut w = Float::with_val(prec, 1);
    for alpha in 0..=alpha_max + 1 {
        if alpha > 0 {
            w *= &l;
            w /= alpha as f64;
        }
        weight.push(w.clone());
    }
    let m: Vec<Vec<f64>> = cols.iter().map(|c| c.iter().map(Float::to_f64).collect()).collect();
    let u: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| c.iter().enumerate().map(|(a, v)| Float::with_val(prec, v * &weight[a]).to_f64()).collect())
        .collect();
    Ok(AnalyticTables { params: *params, alpha_max, k_max, precision: prec, m, u })
}

/// Exact pmf for `k ≤ k_max`; the tail is `𝔐_{0,k_max} = P(N_b > k_max)`.
pub fn hop_pmf_poisson(params: &PoissonParams, k_max: usize) -> Result<HopDistribution> {
    if k_max == 0 {
        return Err(invalid("k_max must be at least 1"));
    }
    let t = build_tables(params, k_max / 2 + 3, k_max)?;
    let pmf: Vec<f64> = (1..=k_max).map(|k| t.pmf(k).unwrap()).collect();
    let tail = t.m(0, k_max).unwrap_or_else(|| 1.0 - pmf.iter().sum::<f64>());
    Ok(HopDistribution { pmf, tail_mass: tail.max(0.0), method: HopMethod::PoissonRecurrence, stderr: None })
}

/// Doubles `k_max` from 64 until the tail falls below `tail_tol`, up to `k_cap`.
pub fn hop_pmf_poisson_to_tail(params: &PoissonParams, tail_tol: f64, k_cap: usize) -> Result<HopDistribution> {
    let mut k = 64usize.min(k_cap.max(1));
    loop {
        let d = hop_pmf_poisson(params, k)?;
        if d.tail_mass <= tail_tol {
            return Ok(d);
        }
        if k >= k_cap {
            return Err(Error::TruncationDominated { tail_mass: d.tail_mass });
        }
        k = (2 * k).min(k_cap);
    }
}

#[cfg(test)]
mod tests;
