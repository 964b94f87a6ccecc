//! Numerical solution of the renewal equation on a uniform grid.
//!
//! For a first gap conditioned to exceed `a`, the density of renewal points
//! at `u ≥ a` is `g_a(u) = f(u) + ∫_a^u f(t) h(u - t) dt`, where `h` solves
//! `h = f + f * h`. The branch-one CDF is
//! `∫_a^x g_a(u) (1 - F(R - u)) du / (1 - F(a))`.
//!
//! [`RenewalTables`] tabulates this CDF for every grid value of `a` in O(N²)
//! time; queries interpolate in `(a, x - a)`.

use crate::error::{invalid, Error, Result};
use crate::models::InterdistanceModel;

pub(super) struct RenewalTables {
    n: usize,
    step: f64,
    radius: f64,
    /// Row `i` (`a = i·step`) holds the conditional CDF at `a + m·step`,
    /// `m = 0..=n-i`, starting at `offsets[i]`.
    table: Vec<f64>,
    offsets: Vec<usize>,
}

fn densities(model: &InterdistanceModel, n: usize, step: f64) -> Result<Vec<f64>> {
    (0..=n)
        .map(|j| {
            model
                .pdf(j as f64 * step)
                .ok_or_else(|| Error::Unsupported("renewal solver needs a model with a density".into()))
        })
        .collect()
}

/// Trapezoid forward substitution for `y(x_n) = src_n + ∫_0^{x_n} y(s) f(x_n - s) ds`.
fn volterra(src: &[f64], f: &[f64], step: f64) -> Result<Vec<f64>> {
    let denom = 1.0 - 0.5 * step * f[0];
    if !(denom > 0.0) {
        return Err(Error::Convergence(format!("grid step {step} too coarse for the density at 0")));
    }
    let mut y = vec![0.0; src.len()];
    y[0] = src[0];
    for n in 1..src.len() {
        let mut acc = 0.5 * y[0] * f[n];
        for m in 1..n {
            acc += y[m] * f[n - m];
        }
        y[n] = (src[n] + step * acc) / denom;
        if !y[n].is_finite() {
            return Err(Error::Convergence("renewal solution is not finite".into()));
        }
    }
    Ok(y)
}

impl RenewalTables {
    pub fn build(model: &InterdistanceModel, radius: f64, max_step: f64) -> Result<Self> {
        let n = (radius / max_step - 1e-9).ceil().max(1.0) as usize;
        let step = radius / n as f64;
        let f = densities(model, n, step)?;
        let h = volterra(&f, &f, step)?;
        let w: Vec<f64> = (0..=n).map(|j| model.survival(radius - j as f64 * step)).collect();

        let mut offsets = vec![0usize; n + 1];
        for i in 1..=n {
            offsets[i] = offsets[i - 1] + (n - i + 2);
        }
        let mut table = vec![0.0; offsets[n] + 1];
        // conv[m] = ∫_{x_i}^{x_m} f(t) h(x_m - t) dt, updated as i decreases.
        let mut conv = vec![0.0; n + 1];
        for i in (0..=n).rev() {
            if i < n {
                for m in (i + 1)..=n {
                    conv[m] += 0.5 * step * (f[i] * h[m - i] + f[i + 1] * h[m - i - 1]);
                }
            }
            conv[i] = 0.0;
            let s_a = model.survival(i as f64 * step);
            let row = &mut table[offsets[i]..offsets[i] + (n - i + 1)];
            let mut acc = 0.0;
            let mut prev = (f[i] + conv[i]) * w[i];
            row[0] = 0.0;
            for m in (i + 1)..=n {
                let cur = (f[m] + conv[m]) * w[m];
                acc += 0.5 * step * (prev + cur);
                prev = cur;
                row[m - i] = acc / s_a;
            }
        }
        Ok(Self { n, step, radius, table, offsets })
    }

    /// Linear interpolation along row `i` at offset `t` from its diagonal.
    fn row_at(&self, i: usize, t: f64) -> f64 {
        let len = self.n - i + 1;
        let row = &self.table[self.offsets[i]..self.offsets[i] + len];
        if len == 1 {
            return 0.0;
        }
        let pos = (t / self.step).max(0.0);
        let m = (pos.floor() as usize).min(len - 2);
        let frac = pos - m as f64;
        row[m] + frac * (row[m + 1] - row[m])
    }

    /// Branch-one CDF, interpolated in `(a, x - a)` and rescaled so that the
    /// mass at `R` is exact.
    pub fn cdf(&self, model: &InterdistanceModel, a: f64, x: f64) -> f64 {
        let raw = |x: f64| {
            let pos = (a / self.step).clamp(0.0, self.n as f64);
            let i = (pos.floor() as usize).min(self.n.saturating_sub(1));
            let theta = pos - i as f64;
            let t = x - a;
            (1.0 - theta) * self.row_at(i, t) + theta * self.row_at(i + 1, t)
        };
        let at_r = raw(self.radius);
        if at_r <= 0.0 {
            return 0.0;
        }
        let exact = 1.0 - model.survival(self.radius) / model.survival(a);
        raw(x) * exact / at_r
    }
}

/// Solves for `g_a` on `[a, R]` with nodes at most `max_step` apart and
/// interpolates it onto `grid`.
pub(super) fn conditional_density(
    model: &InterdistanceModel,
    radius: f64,
    max_step: f64,
    a: f64,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let pdf = |x: f64| model.pdf(x);
    if pdf(0.0).is_none() {
        return Err(Error::Unsupported("renewal solver needs a model with a density".into()));
    }
    solve_conditional(|x| pdf(x).unwrap_or(0.0), radius, max_step, a, grid)
}

pub(super) fn solve_conditional<F: Fn(f64) -> f64>(
    pdf: F,
    radius: f64,
    max_step: f64,
    a: f64,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let span = radius - a;
    let m = ((span / max_step) - 1e-9).ceil().max(1.0) as usize;
    let step = span / m as f64;
    let src: Vec<f64> = (0..=m).map(|j| pdf(a + j as f64 * step)).collect();
    let f: Vec<f64> = (0..=m).map(|j| pdf(j as f64 * step)).collect();
    let g = volterra(&src, &f, step)?;
    let slack = 1e-9 * radius;
    grid.iter()
        .map(|&x| {
            if x < a - slack || x > radius + slack {
                return Err(invalid(format!("grid point {x} outside [{a}, {radius}]")));
            }
            let pos = ((x - a) / step).clamp(0.0, m as f64);
            let j = (pos.floor() as usize).min(m - 1);
            let frac = pos - j as f64;
            Ok(g[j] + frac * (g[j + 1] - g[j]))
        })
        .collect()
}
