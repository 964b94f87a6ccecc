//! Closed-form `M_1(z)`, the hop-count transform `Q(z)` and its moments.
//!
//! Everything is evaluated with MPFR and rounded at the end. Near `z = 0` the
//! closed form is a ratio of two quantities vanishing like `z²`, and finite
//! differences of `Q` cancel heavily, so double precision is not enough.

use super::PoissonParams;
use crate::error::{invalid, Error, Result};
use rug::Float;

const PREC: u32 = 320;

/// Which numerator to use for `M_1(z)`.
///
/// The printed `h_1 + h_2 + h_3` agrees with the transform only to second
/// order around `z = 1`: it drops `(1-s)(1-ρ'-ρ)(z-1)²(z+1)`, where
/// `s = sqrt(1-4ρ'z²)`. [`ClosedFormVariant::Corrected`] adds that term back
/// and matches both the series form and the recurrence pmf.
/// `Q(1)` and `Q'(1)` are the same under both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClosedFormVariant {
    #[default]
    Corrected,
    AsPrinted,
}

fn require_radical(params: &PoissonParams) -> Result<()> {
    if 4.0 * params.rho_prime() > 1.0 {
        return Err(invalid(format!(
            "closed-form transform needs λ' ≥ ln 4, got {}",
            params.lambda_prime()
        )));
    }
    Ok(())
}

pub(crate) fn m1_mp(params: &PoissonParams, z: &Float, variant: ClosedFormVariant, prec: u32) -> Result<Float> {
    require_radical(params)?;
    if z.is_zero() {
        return Ok(Float::with_val(prec, 0));
    }
    let (l, rp, r) = params.mp(prec);
    let z2 = Float::with_val(prec, z * z);
    let z3 = Float::with_val(prec, &z2 * z);
    let disc = Float::with_val(prec, 1 - Float::with_val(prec, 4 * &rp) * &z2);
    if disc < 0 {
        return Err(invalid(format!("1 - 4ρ'z² < 0 at z = {}", z.to_f64())));
    }
    let s = disc.sqrt();
    let e = Float::with_val(prec, &l * Float::with_val(prec, &s - 1u32) / 2u32).exp();
    let one = Float::with_val(prec, 1);
    let c3 = Float::with_val(prec, &one - &rp) - &r; // 1 - ρ' - ρ

    // h_1 = s[(1-ρ'-ρ)z³ - (1-ρ')z² - z(1-ρ) + 2 - ρ' - ρ]
    let mut in1 = Float::with_val(prec, &c3 * &z3);
    in1 -= Float::with_val(prec, Float::with_val(prec, &one - &rp) * &z2);
    in1 -= Float::with_val(prec, z * Float::with_val(prec, &one - &r));
    in1 += Float::with_val(prec, 2 - Float::with_val(prec, &rp + &r));
    let h1 = Float::with_val(prec, &s * &in1);

    // h_2 = E[2ρz³ + 2ρ'z² - z - 1 + (z-1)s]
    let mut in2 = Float::with_val(prec, 2 * Float::with_val(prec, &r * &z3));
    in2 += Float::with_val(prec, 2 * Float::with_val(prec, &rp * &z2));
    in2 -= z;
    in2 -= 1u32;
    in2 += Float::with_val(prec, Float::with_val(prec, z - 1u32) * &s);
    let h2 = Float::with_val(prec, &e * &in2);

    // h_3 = z³(ρ'+ρ-1) + z²(1-3ρ'-2ρ) + z(1-ρ) + ρ' + ρ
    let mut h3 = Float::with_val(prec, -Float::with_val(prec, &c3 * &z3));
    let c2 = Float::with_val(prec, &one - Float::with_val(prec, 3 * &rp)) - Float::with_val(prec, 2 * &r);
    h3 += Float::with_val(prec, &c2 * &z2);
    h3 += Float::with_val(prec, z * Float::with_val(prec, &one - &r));
    h3 += Float::with_val(prec, &rp + &r);

    let mut num = h1 + h2 + h3;
    if variant == ClosedFormVariant::Corrected {
        let zm1 = Float::with_val(prec, z - 1u32);
        let mut extra = Float::with_val(prec, &one - &s) * &c3;
        extra *= Float::with_val(prec, &zm1 * &zm1);
        extra *= Float::with_val(prec, z + 1u32);
        num += extra;
    }
    let bracket = Float::with_val(prec, 1 + Float::with_val(prec, &s - Float::with_val(prec, 2 * z) * &e));
    if bracket.clone().abs() < 1e-14 {
        return Err(Error::Pole(format!("M_1 denominator vanishes near z = {}", z.to_f64())));
    }
    let den = Float::with_val(prec, &r * &z2) * bracket;
    Ok(num / den)
}

pub(crate) fn q_mp(params: &PoissonParams, z: &Float, variant: ClosedFormVariant, prec: u32) -> Result<Float> {
    let (_, rp, r) = params.mp(prec);
    let m1 = m1_mp(params, z, variant, prec)?;
    let z2 = Float::with_val(prec, z * z);
    Ok(Float::with_val(prec, &rp * z) + Float::with_val(prec, &r * &z2) * (1 + m1))
}

/// Closed-form `M_1(z) = Σ_{k≥1} 𝔐_{1,k} z^k`, valid for `λ' ≥ ln 4` and
/// real `z` with `1 - 4ρ'z² ≥ 0`. Negative `z` is accepted (analytic
/// continuation), which the coefficient extraction relies on.
pub fn m1_closed_form(params: &PoissonParams, z: f64) -> Result<f64> {
    m1_closed_form_variant(params, z, ClosedFormVariant::Corrected)
}

pub fn m1_closed_form_variant(params: &PoissonParams, z: f64, variant: ClosedFormVariant) -> Result<f64> {
    Ok(m1_mp(params, &Float::with_val(PREC, z), variant, PREC)?.to_f64())
}

/// `Q(z) = ρ'z + ρz²(1 + M_1(z))`, the generating function of `N_b`.
pub fn q_transform(params: &PoissonParams, z: f64) -> Result<f64> {
    q_transform_variant(params, z, ClosedFormVariant::Corrected)
}

pub fn q_transform_variant(params: &PoissonParams, z: f64, variant: ClosedFormVariant) -> Result<f64> {
    Ok(q_mp(params, &Float::with_val(PREC, z), variant, PREC)?.to_f64())
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Central difference estimate of the `order`-th derivative at `z0` with step `h`.
fn central_derivative<F: Fn(&Float) -> Result<Float>>(f: &F, z0: f64, order: usize, h: f64) -> Result<Float> {
    let mut acc = Float::with_val(PREC, 0);
    for j in 0..=order {
        let z = Float::with_val(PREC, z0) + Float::with_val(PREC, h) * (order as f64 / 2.0 - j as f64);
        let term = f(&z)? * binom(order, j);
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    let hp = Float::with_val(PREC, h);
    Ok(acc / Float::with_val(PREC, rug::ops::Pow::pow(&hp, order as i32)))
}

/// Coefficients `[z^k] Q(z)` for `k = 0..=k_max` from central differences at
/// `z = 0` with step `step` (the error is `O(step²)`).
pub fn pgf_coefficients(params: &PoissonParams, k_max: usize, step: f64) -> Result<Vec<f64>> {
    require_radical(params)?;
    if !(step > 0.0) {
        return Err(invalid("difference step must be positive"));
    }
    let q = |z: &Float| q_mp(params, z, ClosedFormVariant::Corrected, PREC);
    let mut out = Vec::with_capacity(k_max + 1);
    let mut fact = 1.0;
    for k in 0..=k_max {
        if k > 0 {
            fact *= k as f64;
        }
        out.push(central_derivative(&q, 0.0, k, step)?.to_f64() / fact);
    }
    Ok(out)
}

/// `E[N_b (N_b - 1) … (N_b - order + 1)] = Q^{(order)}(1)`, from central
/// differences with base step 1e-4 and one Richardson step.
pub fn factorial_moment(params: &PoissonParams, order: usize) -> Result<f64> {
    if order == 0 {
        return Ok(1.0);
    }
    let q = |z: &Float| q_mp(params, z, ClosedFormVariant::Corrected, PREC);
    let h = 1e-4;
    let coarse = central_derivative(&q, 1.0, order, h)?;
    let fine = central_derivative(&q, 1.0, order, h / 2.0)?;
    Ok(((fine * 4u32 - coarse) / 3u32).to_f64())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanBranch {
    /// `λ' > ln 4`, real square root.
    Radical,
    /// `λ' ≤ ln 4`, the trigonometric continuation.
    Trig,
}

fn finish_mean(num: Float, den: Float, params: &PoissonParams) -> Result<f64> {
    if den.clone().abs() < 1e-60 {
        return Err(Error::Pole(format!("mean formula denominator vanishes at λ' = {}", params.lambda_prime())));
    }
    Ok((num / den).to_f64())
}

/// `E[N_b]` in the radical form, requires `λ' ≥ ln 4`.
pub fn mean_hops_radical(params: &PoissonParams) -> Result<f64> {
    require_radical(params)?;
    let (l, rp, _) = params.mp(PREC);
    let s = Float::with_val(PREC, 1 - Float::with_val(PREC, 4 * &rp)).sqrt();
    let c = Float::with_val(PREC, 2 / Float::with_val(PREC, 1 + &s));
    let half = Float::with_val(PREC, &l / 2u32);
    let es = Float::with_val(PREC, &half * &s).exp();
    let num = Float::with_val(PREC, &es - Float::with_val(PREC, &c * Float::with_val(PREC, -&half).exp()));
    let den = Float::with_val(PREC, half.clone().exp() - Float::with_val(PREC, &c * &es));
    finish_mean(num, den, params)
}

/// `E[N_b]` in the trigonometric form, requires `λ' ≤ ln 4`.
pub fn mean_hops_trig(params: &PoissonParams) -> Result<f64> {
    if 4.0 * params.rho_prime() < 1.0 {
        return Err(invalid(format!("trigonometric form needs λ' ≤ ln 4, got {}", params.lambda_prime())));
    }
    let (l, rp, _) = params.mp(PREC);
    let t = Float::with_val(PREC, Float::with_val(PREC, 4 * &rp) - 1u32).sqrt();
    let half = Float::with_val(PREC, &l / 2u32);
    let arg = Float::with_val(PREC, &half * &t);
    let (sin, cos) = arg.sin_cos(Float::new(PREC));
    let num = Float::with_val(PREC, 2 * Float::with_val(PREC, -&half).exp() * &cos) - 1u32;
    let inner = Float::with_val(PREC, &cos + Float::with_val(PREC, &t * &sin));
    let den = Float::with_val(PREC, 2 - Float::with_val(PREC, half.exp() * inner));
    finish_mean(num, den, params)
}

/// `E[N_b]` for any `λ' > 0`, choosing the branch by `λ'` against `ln 4`.
pub fn mean_hops_closed(params: &PoissonParams) -> Result<(f64, MeanBranch)> {
    if 4.0 * params.rho_prime() < 1.0 {
        Ok((mean_hops_radical(params)?, MeanBranch::Radical))
    } else {
        Ok((mean_hops_trig(params)?, MeanBranch::Trig))
    }
}
