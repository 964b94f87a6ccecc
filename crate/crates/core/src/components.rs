//! Connected-component statistics: vehicle count, component length and hop
//! density.
//!
//! A component ends at the first gap longer than `R`, so the number of
//! vehicles in it is geometric with success probability `1 - F(R)`. Its
//! length `L_cc` is the busy period of the associated `GI/D/∞` queue: the
//! span from the first to the last vehicle plus one coverage radius.

use crate::error::{invalid, Error, Result};
use crate::models::{InterdistanceModel, ModelKind};

/// Generating function `z (1 - F(R)) / (1 - z F(R))` of the vehicle count.
pub fn vehicle_count_pgf(fr: f64, z: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&fr) {
        return Err(invalid(format!("F(R) must lie in [0, 1), got {fr}")));
    }
    if !(z.abs() <= 1.0) {
        return Err(invalid(format!("|z| must be at most 1, got {z}")));
    }
    let den = 1.0 - z * fr;
    if den == 0.0 {
        return Err(Error::Pole(format!("z F(R) = 1 at z = {z}")));
    }
    Ok(z * (1.0 - fr) / den)
}

/// `E[vehicles] = 1 / (1 - F(R))`.
pub fn vehicle_count_mean(fr: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&fr) {
        return Err(invalid(format!("F(R) must lie in [0, 1), got {fr}")));
    }
    Ok(1.0 / (1.0 - fr))
}

/// `E[L_cc] = Σ α_i (1 - e^{-λ_i R})/λ_i / Σ α_i e^{-λ_i R}` for exponential
/// and hyperexponential gaps. For one component this is
/// `(1 - e^{-λR}) / (λ e^{-λR})`.
pub fn mean_component_length(model: &InterdistanceModel, radius: f64) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {radius}")));
    }
    let Some((weights, rates)) = model.mixture() else {
        debug_assert!(matches!(model.kind(), ModelKind::Empirical { .. }));
        return Err(Error::Unsupported("component length needs a parametric model; simulate instead".into()));
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for (&a, &l) in weights.iter().zip(&rates) {
        let e = (-l * radius).exp();
        num += a * (1.0 - e) / l;
        den += a * e;
    }
    if den <= 0.0 {
        return Err(Error::DomainOverflow { x: radius, cap: f64::INFINITY });
    }
    Ok(num / den)
}

/// Mean hops per unit length, with length measured in units of `R`.
pub fn hop_density(mean_hops: f64, mean_length: f64, radius: f64) -> Result<f64> {
    if !(mean_length > 0.0) {
        return Err(invalid(format!("mean length must be positive, got {mean_length}")));
    }
    Ok(mean_hops / (mean_length / radius))
}

/// Component-level averages at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentSummary {
    pub mean_vehicles: f64,
    /// `E[L_cc]` in meters.
    pub mean_length: f64,
    pub hop_density: f64,
}

impl ComponentSummary {
    /// Combines the closed forms with an externally computed `E[N_b]`.
    pub fn from_model(model: &InterdistanceModel, radius: f64, mean_hops: f64) -> Result<Self> {
        let mean_length = mean_component_length(model, radius)?;
        Ok(Self {
            mean_vehicles: vehicle_count_mean(model.cdf(radius))?,
            mean_length,
            hop_density: hop_density(mean_hops, mean_length, radius)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::presets;

    #[test]
    fn pgf_basics() {
        assert_eq!(vehicle_count_pgf(0.0, 0.3).unwrap(), 0.3);
        assert!((vehicle_count_pgf(0.7, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(vehicle_count_pgf(1.0, 0.5).is_err());
        assert!(vehicle_count_pgf(0.5, 1.5).is_err());
        // derivative at 1 is the mean
        let (fr, h) = (0.6, 1e-6);
        let d = (vehicle_count_pgf(fr, 1.0).unwrap() - vehicle_count_pgf(fr, 1.0 - h).unwrap()) / h;
        assert!((d - vehicle_count_mean(fr).unwrap()).abs() < 1e-4);
    }

    #[test]
    fn poisson_anchors() {
        let m = InterdistanceModel::exponential(0.02).unwrap();
        let fr = m.cdf(100.0);
        assert!((vehicle_count_mean(fr).unwrap() - 2f64.exp()).abs() < 1e-12);
        let l = mean_component_length(&m, 100.0).unwrap();
        let want = (1.0 - (-2f64).exp()) / (0.02 * (-2f64).exp());
        assert!((l - want).abs() < 1e-10 && (l - 319.45).abs() < 0.01, "{l}");
        assert!((hop_density(4.12288289562598, l, 100.0).unwrap() - 1.2906).abs() < 1e-3);
        assert_eq!(hop_density(2.0, 200.0, 100.0).unwrap(), 1.0);
        assert!(hop_density(2.0, 0.0, 100.0).is_err());
    }

    #[test]
    fn degenerate_mixture_is_poisson() {
        let p = InterdistanceModel::exponential(1.0 / 14.2).unwrap();
        let h = InterdistanceModel::hyperexponential(vec![1.0, 0.0], vec![1.0 / 14.2, 1.0 / 43.2]).unwrap();
        for r in [10.0, 50.0, 100.0] {
            let a = mean_component_length(&p, r).unwrap();
            let b = mean_component_length(&h, r).unwrap();
            assert!((a - b).abs() <= 1e-12 * a, "{a} {b}");
        }
    }

    #[test]
    fn hyperexp_matches_printed_two_term_form() {
        let m = presets::burst_a();
        let (w, l) = m.mixture().unwrap();
        let r = 100.0;
        let printed = (w[0] * l[1] * (1.0 - (-l[0] * r).exp()) + w[1] * l[0] * (1.0 - (-l[1] * r).exp()))
            / (l[0] * l[1] * (w[0] * (-l[0] * r).exp() + w[1] * (-l[1] * r).exp()));
        let got = mean_component_length(&m, r).unwrap();
        assert!((got - printed).abs() < 1e-9 * printed);
    }

    #[test]
    fn empirical_unsupported() {
        let m = InterdistanceModel::empirical(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(mean_component_length(&m, 2.0), Err(Error::Unsupported(_))));
    }
}
