//! Multiprecision helpers.

/// log2 of `n! / x^n`, the worst-case error amplification of the forward
/// recurrences in the Poisson tables.
pub(crate) fn log2_amplification(x: f64, n: usize) -> f64 {
    let mut acc: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for i in 1..=n {
        acc += (i as f64 / x).log2();
        worst = worst.max(acc);
    }
    worst
}
