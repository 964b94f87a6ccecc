//! Series form of `M_1(z)` and the auxiliary sums it is built from.
//!
//! ```text
//! b_i      = ρ'^i Σ_{j=0}^{i} (-1)^j λ'^j/j! C(2i-j, i)
//! c_i      = ρ'^i C(2i-1, i)
//! a_{2k,i}   = ρ'^{k-1} (-1)^i C(2k-i-3, k-2)
//! a_{2k+1,i} = ρ'^k     (-1)^i C(2k-i-1, k-1)
//! A_i^(o)(z) = Σ_{k ≥ max(i,1)}   a_{2k+1,i} z^{2k+1}
//! A_i^(e)(z) = Σ_{k ≥ max(i+1,2)} a_{2k,i}   z^{2k}
//! ```
//!
//! The sums converge for `λ' > ln 4 + 2 ln z`. Partial sums are generated by
//! term ratios, so no large binomial is ever formed inside a sum.

use super::{seed_columns_mp, table_precision, PoissonParams, SeedVariant};
use crate::error::{invalid, Error, Result};
use rug::Float;

/// Largest truncation accepted by the series routines.
pub const SERIES_MAX_TERMS: usize = 10_000;
/// Seeds beyond this order are below `1e-100` for any practical `λ'` and are
/// not computed.
const SEED_ORDER_CAP: usize = 256;
const REL_STOP: f64 = 1e-16;

/// `C(n, k)`: exact integer arithmetic for `n ≤ 60`, log-space above.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= 60 {
        let mut acc: u128 = 1;
        for j in 0..k {
            acc = acc * (n - j) as u128 / (j + 1) as u128;
        }
        return acc as f64;
    }
    let ln: f64 = (0..k).map(|j| ((n - j) as f64 / (j + 1) as f64).ln()).sum();
    ln.exp()
}

fn sign(i: usize) -> f64 {
    if i % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `a_{2k+1,i}`, zero outside `k ≥ max(i, 1)`.
pub fn a_odd(params: &PoissonParams, k: usize, i: usize) -> f64 {
    if k < i.max(1) {
        return 0.0;
    }
    params.rho_prime().powi(k as i32) * sign(i) * binomial(2 * k - i - 1, k - 1)
}

/// `a_{2k,i}`, zero outside `k ≥ max(i+1, 2)`.
pub fn a_even(params: &PoissonParams, k: usize, i: usize) -> f64 {
    if k < (i + 1).max(2) {
        return 0.0;
    }
    params.rho_prime().powi(k as i32 - 1) * sign(i) * binomial(2 * k - i - 3, k - 2)
}

/// `b_i` and `c_i` for `i = 0..=i_max` (`c_0` is unused and set to 0).
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// `b_i · e^{ln_scale}`, accumulated from the `j = 0` term by ratios.
fn b_scaled(lp: f64, ln_rp: f64, i: usize, ln_c2i_i: f64, ln_scale: f64) -> f64 {
    let mut t = (ln_c2i_i + i as f64 * ln_rp + ln_scale).exp();
    let mut sum = t;
    for j in 0..i {
        t *= -lp / (j + 1) as f64 * (i - j) as f64 / (2 * i - j) as f64;
        sum += t;
        if j as f64 > lp && t.abs() <= REL_STOP * sum.abs() {
            break;
        }
    }
    sum
}

pub fn series_coeffs(params: &PoissonParams, i_max: usize) -> SeriesCoefficients {
    let lp = params.lambda_prime();
    let ln_rp = -lp;
    let mut b = Vec::with_capacity(i_max + 1);
    let mut c = Vec::with_capacity(i_max + 1);
    let mut ln_c = 0.0; // ln C(2i, i)
    for i in 0..=i_max {
        if i > 0 {
            ln_c += ((2 * i - 1) as f64 * (2 * i) as f64 / (i as f64 * i as f64)).ln();
        }
        b.push(b_scaled(lp, ln_rp, i, ln_c, 0.0));
        // C(2i-1, i) = C(2i, i)/2
        c.push(if i == 0 { 0.0 } else { (ln_c - 2f64.ln() + i as f64 * ln_rp).exp() });
    }
    SeriesCoefficients { b, c }
}

fn check_domain(params: &PoissonParams, z: f64, trunc: usize) -> Result<()> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(invalid(format!("series needs z > 0, got {z}")));
    }
    if !(1..=SERIES_MAX_TERMS).contains(&trunc) {
        return Err(invalid(format!("truncation must lie in 1..={SERIES_MAX_TERMS}, got {trunc}")));
    }
    let bound = 4f64.ln() + 2.0 * z.ln();
    if params.lambda_prime() <= bound {
        return Err(Error::Convergence(format!(
            "series diverges: λ' = {} ≤ ln 4 + 2 ln z = {bound}",
            params.lambda_prime()
        )));
    }
    Ok(())
}

/// `Σ_{i=1}^{trunc} c_i z^{2i}`.
fn sum_c(params: &PoissonParams, z: f64, trunc: usize) -> f64 {
    let x = params.rho_prime() * z * z;
    let mut term = x; // c_1 z² = ρ' z²
    let mut acc = term;
    for i in 1..trunc {
        term *= x * (2 * i + 1) as f64 * (2 * i) as f64 / ((i + 1) as f64 * i as f64);
        acc += term;
        if term.abs() <= REL_STOP * acc.abs() {
            break;
        }
    }
    acc
}

/// `Σ_{i=1}^{trunc} b_i z^{2i+1}`.
fn sum_b(params: &PoissonParams, z: f64, trunc: usize) -> f64 {
    let lp = params.lambda_prime();
    let ln_z = z.ln();
    let mut ln_c = 0.0;
    let mut acc = 0.0;
    let mut last = f64::INFINITY;
    for i in 1..=trunc {
        ln_c += ((2 * i - 1) as f64 * (2 * i) as f64 / (i as f64 * i as f64)).ln();
        let term = b_scaled(lp, -lp, i, ln_c, (2 * i + 1) as f64 * ln_z);
        acc += term;
        // b_i can vanish for isolated i (b_1 = 0 at λ' = 2), so only stop
        // once the terms are past λ' and shrinking.
        if i as f64 > lp && term.abs() <= REL_STOP * acc.abs() && term.abs() <= last {
            break;
        }
        last = term.abs();
    }
    acc
}

/// `A_i^{(o)}(z)` from at most `trunc` terms.
fn a_odd_sum(params: &PoissonParams, i: usize, z: f64, trunc: usize) -> f64 {
    let x = params.rho_prime() * z * z;
    let k0 = i.max(1);
    // a_{2k0+1,i} z^{2k0+1} with C(2k0-i-1, k0-1) = 1
    let mut term = sign(i) * (k0 as f64 * x.ln() + z.ln()).exp();
    let mut acc = term;
    for k in k0..k0 + trunc - 1 {
        let ratio = x * (2 * k - i + 1) as f64 * (2 * k - i) as f64 / (k as f64 * (k - i + 1) as f64);
        term *= ratio;
        acc += term;
        if ratio < 1.0 && term.abs() <= REL_STOP * acc.abs() {
            break;
        }
    }
    acc
}

/// `A_i^{(e)}(z)` from at most `trunc` terms.
fn a_even_sum(params: &PoissonParams, i: usize, z: f64, trunc: usize) -> f64 {
    let rp = params.rho_prime();
    let x = rp * z * z;
    let k0 = (i + 1).max(2);
    // a_{2k0,i} z^{2k0} with C(2k0-i-3, k0-2) = 1
    let mut term = sign(i) * ((k0 - 1) as f64 * rp.ln() + 2.0 * k0 as f64 * z.ln()).exp();
    let mut acc = term;
    for k in k0..k0 + trunc - 1 {
        let ratio = x * (2 * k - i - 1) as f64 * (2 * k - i - 2) as f64 / ((k - 1) as f64 * (k - i) as f64);
        term *= ratio;
        acc += term;
        if ratio < 1.0 && term.abs() <= REL_STOP * acc.abs() {
            break;
        }
    }
    acc
}

/// `u_{α,1}` and `u_{α,2}` for `α = 0..=alpha_max` from the corrected seeds.
fn seed_u(params: &PoissonParams, alpha_max: usize) -> (Vec<f64>, Vec<f64>) {
    let prec = table_precision(params.lambda_prime(), alpha_max);
    let (c1, c2) = seed_columns_mp(params, alpha_max, SeedVariant::Corrected, prec);
    let l = Float::with_val(prec, params.lambda_prime());
    let mut w = Float::with_val(prec, 1);
    let (mut u1, mut u2) = (Vec::new(), Vec::new());
    for a in 0..=alpha_max {
        if a > 0 {
            w *= &l;
            w /= a as f64;
        }
        u1.push(Float::with_val(prec, &c1[a] * &w).to_f64());
        u2.push(Float::with_val(prec, &c2[a] * &w).to_f64());
    }
    (u1, u2)
}

/// `M_1(z)` from its series representation with partial sums of at most
/// `trunc` terms. Refuses when `λ' ≤ ln 4 + 2 ln z`.
pub fn m1_series(params: &PoissonParams, z: f64, trunc: usize) -> Result<f64> {
    if z == 0.0 {
        return Ok(0.0);
    }
    check_domain(params, z, trunc)?;
    let top = trunc.min(SEED_ORDER_CAP);
    let (u1, u2) = seed_u(params, top);
    let mut sa = 0.0;
    for i in 0..=top {
        let t = u1[i] * a_odd_sum(params, i, z, trunc) + u2[i] * a_even_sum(params, i, z, trunc);
        sa += t;
        if i > 2 && t.abs() <= REL_STOP * sa.abs() {
            break;
        }
    }
    let sc = sum_c(params, z, trunc);
    let sb = sum_b(params, z, trunc);
    let (rp, rho) = (params.rho_prime(), params.rho());
    let m01 = 1.0 - rp;
    let m02 = 1.0 - rho - rp;
    let z2 = z * z;
    let num = (z - 1.0) * sa + (m01 * z + m02 * z2 - m01 * z2) * sc - m02 * z2 * sb;
    let den = rho * z2 * (1.0 - z + sc - sb);
    Ok(num / den)
}

/// Partial sums next to their closed forms at one `(λ', z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentitySums {
    pub sum_c: f64,
    pub sum_c_closed: f64,
    pub sum_b: f64,
    pub sum_b_closed: f64,
    /// `Σ_{α≥1} u_{α,1} A_α^{(o)}(z)`.
    pub sum_u1_odd: f64,
    pub sum_u1_odd_closed: f64,
    /// `Σ_{α≥1} u_{α,2} A_α^{(e)}(z)`.
    pub sum_u2_even: f64,
    pub sum_u2_even_closed: f64,
}

/// `g(z) = sqrt(1 - 4ρ'z²) - 1`.
pub(crate) fn aux_g(params: &PoissonParams, z: f64) -> f64 {
    (1.0 - 4.0 * params.rho_prime() * z * z).sqrt() - 1.0
}

/// `f(z) = 2z(ρ'z²) / (sqrt(1 - 4ρ'z²) - (1 - 4ρ'z²))`.
pub(crate) fn aux_f(params: &PoissonParams, z: f64) -> f64 {
    let rp = params.rho_prime();
    let d = 1.0 - 4.0 * rp * z * z;
    2.0 * z * (rp * z * z) / (d.sqrt() - d)
}

/// `f(z)` with `ρ` in the denominator, as printed.
#[cfg(test)]
pub(crate) fn aux_f_as_printed(params: &PoissonParams, z: f64) -> f64 {
    let rp = params.rho_prime();
    2.0 * z * (rp * z * z) / ((1.0 - 4.0 * rp * z * z).sqrt() - (1.0 - 4.0 * params.rho() * z * z))
}

pub fn identity_sums(params: &PoissonParams, z: f64, trunc: usize) -> Result<IdentitySums> {
    check_domain(params, z, trunc)?;
    let (lp, rp) = (params.lambda_prime(), params.rho_prime());
    let f = aux_f(params, z);
    let g = aux_g(params, z);
    let e = (0.5 * lp * g).exp();

    let top = trunc.min(SEED_ORDER_CAP);
    let (u1, u2) = seed_u(params, top);
    let (mut odd, mut even) = (0.0, 0.0);
    for a in 1..=top {
        odd += u1[a] * a_odd_sum(params, a, z, trunc);
        even += u2[a] * a_even_sum(params, a, z, trunc);
    }

    let half = 1.0 + 0.5 * g;
    Ok(IdentitySums {
        sum_c: sum_c(params, z, trunc),
        sum_c_closed: f * g * g / (4.0 * rp * z * z * z),
        sum_b: sum_b(params, z, trunc),
        sum_b_closed: z * (e - g - 1.0) / (1.0 + g),
        sum_u1_odd: odd,
        sum_u1_odd_closed: f / half * (0.5 * g * (rp - 1.0) + e - 1.0),
        sum_u2_even: even,
        sum_u2_even_closed: 2.0 * rp * z * f / g * (1.0 + 0.5 * lp * g - e)
            + 0.5 * (rp - 1.0) * z * f * g / half
            + z * f * (e - 1.0) / half,
    })
}

#[cfg(test)]
pub(crate) fn a_odd_partial(params: &PoissonParams, i: usize, z: f64, trunc: usize) -> f64 {
    a_odd_sum(params, i, z, trunc)
}

#[cfg(test)]
pub(crate) fn a_even_partial(params: &PoissonParams, i: usize, z: f64, trunc: usize) -> f64 {
    a_even_sum(params, i, z, trunc)
}
