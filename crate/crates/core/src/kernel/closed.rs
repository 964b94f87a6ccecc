//! Closed-form branch-one CDFs for Poisson and two-component hyperexponential
//! traffic. `a` is the lower edge of the support (`R - x_prev`, or 0 for `τ_1`).

/// `(1 - e^{-d t}) / d`, continuous at `d = 0`.
#[inline]
fn phi(d: f64, t: f64) -> f64 {
    if d == 0.0 {
        t
    } else {
        -(-d * t).exp_m1() / d
    }
}

#[derive(Debug, Clone)]
pub(super) struct PoissonKernel {
    rate: f64,
    radius: f64,
}

impl PoissonKernel {
    pub fn new(rate: f64, radius: f64) -> Self {
        Self { rate, radius }
    }

    /// `e^{-λ(R-x)} - e^{-λ(R-a)}`.
    #[inline]
    pub fn cdf(&self, a: f64, x: f64) -> f64 {
        (-self.rate * (self.radius - x)).exp() - (-self.rate * (self.radius - a)).exp()
    }
}

/// The renewal density of a two-phase mixture is `1/μ + B e^{-λ_m x}` with
/// `1/μ = λ_1 λ_2 / λ_m`. Conditioning the first gap to exceed `a` changes
/// only the coefficient of the transient term.
#[derive(Debug, Clone)]
pub(super) struct Hyperexp2 {
    w: [f64; 2],
    l: [f64; 2],
    inv_mu: f64,
    /// `α_i λ_i (1 - λ_j / λ_m)`, the per-phase share of the transient.
    kb: [f64; 2],
    /// `λ_m - λ_i`.
    d: [f64; 2],
    radius: f64,
}

/// Branch-one CDF with every `a`-dependent factor precomputed.
pub(super) struct Hyperexp2At<'a> {
    k: &'a Hyperexp2,
    a: f64,
    /// `e^{-λ_i (R - a)}`.
    ea: [f64; 2],
    /// Transient coefficient per phase, already divided by `1 - F(a)`.
    c: [f64; 2],
}

impl Hyperexp2 {
    pub fn new(weights: &[f64], rates: &[f64], radius: f64) -> Self {
        let (w, l) = if weights.len() == 1 {
            ([weights[0], 0.0], [rates[0], rates[0]])
        } else {
            ([weights[0], weights[1]], [rates[0], rates[1]])
        };
        let lm = w[1] * l[0] + w[0] * l[1];
        let inv_mu = l[0] * l[1] / lm;
        let kb = [w[0] * l[0] * (1.0 - l[1] / lm), w[1] * l[1] * (1.0 - l[0] / lm)];
        let d = [lm - l[0], lm - l[1]];
        Self { w, l, inv_mu, kb, d, radius }
    }

    pub fn at(&self, a: f64) -> Hyperexp2At<'_> {
        let s_a: f64 = (0..2).map(|i| self.w[i] * (-self.l[i] * a).exp()).sum();
        let ratio: f64 = (0..2).map(|i| self.kb[i] * (-self.l[i] * a).exp()).sum::<f64>() / s_a;
        let ea = [(-self.l[0] * (self.radius - a)).exp(), (-self.l[1] * (self.radius - a)).exp()];
        let c = [ratio * self.w[0] * ea[0], ratio * self.w[1] * ea[1]];
        Hyperexp2At { k: self, a, ea, c }
    }

    pub fn cdf(&self, a: f64, x: f64) -> f64 {
        self.at(a).cdf(x)
    }
}

impl Hyperexp2At<'_> {
    #[inline]
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.k;
        let t = x - self.a;
        let mut stationary = 0.0;
        let mut transient = 0.0;
        for i in 0..2 {
            if k.w[i] == 0.0 {
                continue;
            }
            let ex = (-k.l[i] * (k.radius - x)).exp();
            stationary += k.w[i] / k.l[i] * (ex - self.ea[i]);
            transient += self.c[i] * phi(k.d[i], t);
        }
        k.inv_mu * stationary + transient
    }
}
