//! Bracketed inversion of monotone functions.

/// Finds `x` in `[lo, hi]` with `f(x) = target` for nondecreasing `f`, to an
/// absolute tolerance `tol` on `x`.
///
/// Illinois steps keep the bracket; whenever a step fails to halve the bracket
/// relative to two steps earlier a plain bisection step is taken instead, so
/// the bracket width is guaranteed to fall below `tol`.
pub(crate) fn invert_nondecreasing<F: Fn(f64) -> f64>(
    f: F,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> f64 {
    let mut flo = f(lo) - target;
    if flo >= 0.0 {
        return lo;
    }
    let mut fhi = f(hi) - target;
    if fhi <= 0.0 {
        return hi;
    }
    let mut widths = [hi - lo, hi - lo];
    let mut last_side = 0i8;
    let mut iter = 0;
    while hi - lo > tol && iter < 200 {
        iter += 1;
        let width = hi - lo;
        let bisect = width > 0.5 * widths[0];
        widths = [widths[1], width];
        let mut x = if bisect {
            0.5 * (lo + hi)
        } else {
            (lo * fhi - hi * flo) / (fhi - flo)
        };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x) - target;
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if last_side == -1 && !bisect {
                fhi *= 0.5;
            }
            last_side = -1;
        } else {
            hi = x;
            fhi = fx;
            if last_side == 1 && !bisect {
                flo *= 0.5;
            }
            last_side = 1;
        }
    }
    0.5 * (lo + hi)
}
