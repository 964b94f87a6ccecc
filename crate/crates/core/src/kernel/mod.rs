//! Transition kernel of the relay-gap process.
//!
//! `τ_n` is the distance between consecutive relays when every relay forwards
//! to the farthest vehicle within range `R`. Given `τ_{n-1} = x_prev ≤ R`, the
//! first gap after the current relay is known to exceed `a = R - x_prev`, and
//! `τ_n` has two branches:
//!
//! - on `[a, R]`, the last renewal of the gap process before `R`;
//! - on `[R, ∞)`, a lone gap longer than `R`, with CDF `(F(x) - F(a)) / (1 - F(a))`.
//!
//! `τ_1` is the special case `x_prev = R` (`a = 0`). Internally every query is
//! phrased in terms of `a`.

mod closed;
mod renewal;

use crate::error::{invalid, Error, Result};
use crate::invert::invert_nondecreasing;
use crate::models::{InterdistanceModel, ModelKind};
use crate::rng::open01;
use closed::{Hyperexp2, PoissonKernel};
use rand::Rng;
use renewal::RenewalTables;

/// Relative tolerance of inverse-CDF sampling, in units of `R`.
const SAMPLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelMode {
    ClosedFormPoisson,
    /// Two-component hyperexponential; a one-component mixture is accepted and
    /// padded with a zero-weight twin.
    ClosedFormHyperexp2,
    /// Trapezoid solution of the renewal equation on a uniform grid of step
    /// `step`, with CDF queries limited to `x ≤ cap`.
    NumericalRenewal { step: f64, cap: f64 },
}

enum Imp {
    Poisson(PoissonKernel),
    Hyperexp(Hyperexp2),
    Renewal(Box<RenewalTables>),
}

pub struct RelayKernel {
    model: InterdistanceModel,
    radius: f64,
    mode: KernelMode,
    /// `1 - F(R)`.
    surv_r: f64,
    imp: Imp,
}

impl std::fmt::Debug for RelayKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RelayKernel")
            .field("model", &self.model)
            .field("radius", &self.radius)
            .field("mode", &self.mode)
            .finish()
    }
}

impl RelayKernel {
    pub fn new(model: InterdistanceModel, radius: f64, mode: KernelMode) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid(format!("coverage radius must be positive, got {radius}")));
        }
        let imp = match mode {
            KernelMode::ClosedFormPoisson => match model.kind() {
                ModelKind::Exponential { rate } => Imp::Poisson(PoissonKernel::new(*rate, radius)),
                ModelKind::Hyperexponential { weights, rates } if weights.len() == 1 => {
                    Imp::Poisson(PoissonKernel::new(rates[0], radius))
                }
                _ => return Err(Error::Unsupported("Poisson closed form needs an exponential model".into())),
            },
            KernelMode::ClosedFormHyperexp2 => match model.mixture() {
                Some((w, r)) if w.len() <= 2 => Imp::Hyperexp(Hyperexp2::new(&w, &r, radius)),
                _ => {
                    return Err(Error::Unsupported(
                        "hyperexponential closed form needs at most two components".into(),
                    ))
                }
            },
            KernelMode::NumericalRenewal { step, cap } => {
                if !(step > 0.0 && step <= radius / 200.0) {
                    return Err(invalid(format!("renewal grid step must lie in (0, R/200], got {step}")));
                }
                if !(cap >= radius) {
                    return Err(invalid(format!("renewal cap {cap} must be at least R")));
                }
                Imp::Renewal(Box::new(RenewalTables::build(&model, radius, step)?))
            }
        };
        let surv_r = model.survival(radius);
        Ok(Self { model, radius, mode, surv_r, imp })
    }

    /// Closed form when one exists for the model, else the renewal solver at
    /// default resolution.
    pub fn auto(model: InterdistanceModel, radius: f64) -> Result<Self> {
        match model.mixture() {
            Some((w, _)) if w.len() == 1 => Self::new(model, radius, KernelMode::ClosedFormPoisson),
            Some((w, _)) if w.len() == 2 => Self::new(model, radius, KernelMode::ClosedFormHyperexp2),
            _ => Self::numerical(model, radius),
        }
    }

    /// Renewal solver with step `R/1000` and a cap of 20 mean gaps beyond `R`.
    pub fn numerical(model: InterdistanceModel, radius: f64) -> Result<Self> {
        let cap = radius + 20.0 * model.mean();
        Self::new(model, radius, KernelMode::NumericalRenewal { step: radius / 1000.0, cap })
    }

    pub fn model(&self) -> &InterdistanceModel {
        &self.model
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    /// `P(τ ≤ x | first gap > a)` for `x` in `[a, R]`.
    fn branch1(&self, a: f64, x: f64) -> f64 {
        match &self.imp {
            Imp::Poisson(k) => k.cdf(a, x),
            Imp::Hyperexp(k) => k.cdf(a, x),
            Imp::Renewal(t) => t.cdf(&self.model, a, x),
        }
    }

    /// `P(τ ≤ R | first gap > a)`, exact for every mode.
    fn mass_within(&self, a: f64) -> f64 {
        1.0 - self.surv_r / self.model.survival(a)
    }

    fn check_x(&self, x: f64) -> Result<()> {
        if x.is_nan() {
            return Err(invalid("x is NaN"));
        }
        if let KernelMode::NumericalRenewal { cap, .. } = self.mode {
            if x > cap {
                return Err(Error::DomainOverflow { x, cap });
            }
        }
        Ok(())
    }

    fn a_of(&self, x_prev: f64) -> Result<f64> {
        if x_prev > self.radius {
            return Err(Error::InvalidConditioning { x_prev, radius: self.radius });
        }
        if !(x_prev > 0.0) {
            return Err(invalid(format!("previous relay gap must be positive, got {x_prev}")));
        }
        Ok((self.radius - x_prev).max(0.0))
    }

    fn cdf_given_a(&self, a: f64, x: f64) -> f64 {
        if x <= a {
            0.0
        } else if x <= self.radius {
            self.branch1(a, x).clamp(0.0, 1.0)
        } else {
            1.0 - self.model.survival(x) / self.model.survival(a)
        }
    }

    pub fn tau1_cdf(&self, x: f64) -> Result<f64> {
        self.check_x(x)?;
        Ok(self.cdf_given_a(0.0, x))
    }

    pub fn tau_cond_cdf(&self, x_prev: f64, x: f64) -> Result<f64> {
        let a = self.a_of(x_prev)?;
        self.check_x(x)?;
        Ok(self.cdf_given_a(a, x))
    }

    /// `P(τ_n > R | τ_{n-1} = x_prev)`, the chain's stopping probability.
    pub fn exit_probability(&self, x_prev: f64) -> Result<f64> {
        let a = self.a_of(x_prev)?;
        Ok(self.surv_r / self.model.survival(a))
    }

    /// Next relay gap from uniform `u`, or `None` when it exceeds `R`.
    /// Equivalent to inverting the full conditional CDF at `u`.
    pub(crate) fn step_from_uniform(&self, a: f64, u: f64) -> Option<f64> {
        let within = self.mass_within(a);
        if u >= within {
            return None;
        }
        let tol = SAMPLE_TOL * self.radius;
        Some(match &self.imp {
            Imp::Hyperexp(k) => {
                let at = k.at(a);
                invert_nondecreasing(|x| at.cdf(x), u, a, self.radius, tol)
            }
            _ => invert_nondecreasing(|x| self.branch1(a, x), u, a, self.radius, tol),
        })
    }

    fn sample_given_a<R: Rng + ?Sized>(&self, a: f64, rng: &mut R) -> f64 {
        let u = open01(rng);
        if let Some(x) = self.step_from_uniform(a, u) {
            return x;
        }
        // Beyond R: 1 - S(x)/S(a) = u.
        let log_target = (1.0 - u).ln() + self.model.log_survival(a);
        self.model.inverse_log_survival(log_target).max(self.radius)
    }

    pub fn sample_tau1<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_given_a(0.0, rng)
    }

    pub fn sample_tau_cond<R: Rng + ?Sized>(&self, x_prev: f64, rng: &mut R) -> Result<f64> {
        let a = self.a_of(x_prev)?;
        Ok(self.sample_given_a(a, rng))
    }

    /// Renewal density `g` of the conditional branch for `x_prev`, evaluated
    /// on `grid` (every point must lie in `[R - x_prev, R]`). Solved directly
    /// from the Volterra equation, independently of the tabulated CDF.
    pub fn renewal_density(&self, x_prev: f64, grid: &[f64]) -> Result<Vec<f64>> {
        let a = self.a_of(x_prev)?;
        let step = match self.mode {
            KernelMode::NumericalRenewal { step, .. } => step,
            _ => return Err(Error::Unsupported("renewal density needs NumericalRenewal mode".into())),
        };
        renewal::conditional_density(&self.model, self.radius, step, a, grid)
    }
}
