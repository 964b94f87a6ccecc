use super::series::{a_even_partial, a_odd_partial, aux_f, aux_f_as_printed, aux_g, binomial};
use super::*;
use proptest::prelude::*;

fn p(l: f64) -> PoissonParams {
    PoissonParams::new(l).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn params_reject_nonpositive() {
    assert!(PoissonParams::new(0.0).is_err());
    assert!(PoissonParams::new(f64::NAN).is_err());
    let q = PoissonParams::from_rate(0.02, 100.0).unwrap();
    assert!(close(q.lambda_prime(), 2.0, 1e-15));
    assert!(close(q.rho(), 2.0 * (-2f64).exp(), 1e-15));
}

#[test]
fn seed_alpha_zero() {
    for l in [0.7, 2.0, 5.0] {
        let q = p(l);
        let (m1, m2) = seed_row_m(&q, 0, SeedVariant::Corrected);
        assert!(close(m1, 1.0 - q.rho_prime(), 1e-15));
        assert!(close(m2, 1.0 - q.rho() - q.rho_prime(), 1e-15));
        let (_, m2p) = seed_row_m(&q, 0, SeedVariant::AsPrinted);
        assert!(close(m2p, 1.0 - q.rho() - q.rho_prime() / l, 1e-15));
    }
}

#[test]
fn seed_alpha_one_matches_one_line_formula() {
    let q = p(2.0);
    let (m1, m2) = seed_row_m(&q, 1, SeedVariant::Corrected);
    let expect = 1.0 - 0.5 + 0.5 * q.rho_prime();
    assert!(close(m1, expect, 1e-15));
    assert!(close(m2, m1 - q.rho() / 2.0, 1e-15));
}

#[test]
fn large_lambda_limit() {
    let (m1, _) = seed_row_m(&p(60.0), 0, SeedVariant::Corrected);
    assert!(close(m1, 1.0, 1e-15));
}

#[test]
fn oracle_k0_and_closed_integral() {
    let q = p(2.0);
    let e = m_alpha_k_oracle(&q, 3, 0, 100, 1).unwrap();
    assert_eq!((e.value, e.stderr), (1.0, 0.0));
    let e = m_alpha_k_oracle(&q, 0, 1, 1_000_000, 2).unwrap();
    assert!((e.value - (1.0 - q.rho_prime())).abs() < 3.0 * e.stderr, "{e:?}");
    assert!(m_alpha_k_oracle(&q, 7, 1, 100, 1).is_err());
    assert!(m_alpha_k_oracle(&q, 1, 9, 100, 1).is_err());
}

#[test]
fn oracle_is_reproducible() {
    let q = p(2.0);
    let a = m_alpha_k_oracle(&q, 1, 3, 200_000, 9).unwrap();
    let b = m_alpha_k_oracle(&q, 1, 3, 200_000, 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn oracle_adjudicates_second_seed() {
    // The printed and corrected forms differ for α = 0 and α ≥ 2.
    let q = p(2.0);
    for alpha in [0usize, 2, 3] {
        let o = m_alpha_k_oracle(&q, alpha, 2, 1_000_000, 40 + alpha as u64).unwrap();
        let (_, good) = seed_row_m(&q, alpha, SeedVariant::Corrected);
        let (_, bad) = seed_row_m(&q, alpha, SeedVariant::AsPrinted);
        assert!((o.value - good).abs() < 4.0 * o.stderr, "α={alpha}: {o:?} vs {good}");
        assert!((o.value - bad).abs() > 20.0 * o.stderr, "α={alpha}: {o:?} vs printed {bad}");
    }
}

#[test]
fn table_matches_oracle_grid() {
    for l in [1.5, 2.0, 4.0] {
        let q = p(l);
        let t = build_tables(&q, 8, 6).unwrap();
        let grid = m_alpha_k_oracle_grid(&q, 4, 6, 400_000, 77).unwrap();
        for (k, row) in grid.iter().enumerate() {
            for (a, e) in row.iter().enumerate() {
                let v = t.m(a, k).unwrap();
                assert!((e.value - v).abs() <= 4.0 * e.stderr + 1e-15, "λ'={l} α={a} k={k}: {e:?} vs {v}");
            }
        }
    }
}

#[test]
fn recurrence_residuals_small() {
    for l in [1.5, 2.0, 5.0] {
        let t = build_tables(&p(l), 40, 60).unwrap();
        let (r0, ra) = t.recurrence_residuals();
        assert!(r0 <= 1e-12 && ra <= 1e-12, "λ'={l}: {r0} {ra}");
    }
}

#[test]
fn tables_stable_under_extra_precision() {
    let q = p(2.0);
    let t = build_tables(&q, 60, 100).unwrap();
    let hi = build_tables_at(&q, 60, 100, SeedVariant::Corrected, t.precision() + 128).unwrap();
    for k in 0..=100 {
        for a in 0..=t.depth(k).unwrap() {
            let (x, y) = (t.m(a, k).unwrap(), hi.m(a, k).unwrap());
            assert!((x - y).abs() <= 1e-15 * y.abs().max(1e-300), "α={a} k={k}: {x} {y}");
        }
    }
}

#[test]
fn table_underflow_detected() {
    assert!(matches!(build_tables(&p(2.0), 5, 20), Err(Error::TableUnderflow { .. })));
    assert!(build_tables(&p(2.0), 12, 20).is_ok());
}

#[test]
fn pmf_first_values() {
    let q = p(2.0);
    let d = hop_pmf_poisson(&q, 10).unwrap();
    assert!(close(d.p(1), q.rho_prime(), 1e-16));
    assert!(close(d.p(2), q.rho(), 1e-16));
    // ρ 𝔐_{1,1} = 2e^{-2}(1 - 1/2 + e^{-2}/2)
    assert!(close(d.p(3), 0.1536509221, 1e-10), "{}", d.p(3));
    assert_eq!(d.method, HopMethod::PoissonRecurrence);
}

#[test]
fn pmf_normalization_includes_tail() {
    for l in [0.5, 2.0, 6.0] {
        let d = hop_pmf_poisson(&p(l), 40).unwrap();
        let s: f64 = d.pmf.iter().sum();
        assert!(close(s + d.tail_mass, 1.0, 1e-12), "λ'={l}: {}", s + d.tail_mass);
        assert!(d.pmf.iter().all(|&v| v >= 0.0));
    }
    // At λ'=2 the mass beyond 40 hops is still about 5e-6.
    let d = hop_pmf_poisson(&p(2.0), 40).unwrap();
    assert!(d.tail_mass > 1e-6 && d.tail_mass < 1e-5, "{}", d.tail_mass);
    let d = hop_pmf_poisson(&p(2.0), 200).unwrap();
    assert!(d.tail_mass < 1e-20);
}

#[test]
fn pmf_to_tail() {
    let d = hop_pmf_poisson_to_tail(&p(2.0), 1e-14, 4096).unwrap();
    assert!(d.tail_mass <= 1e-14);
    assert!(matches!(hop_pmf_poisson_to_tail(&p(2.0), 1e-14, 32), Err(Error::TruncationDominated { .. })));
}

#[test]
fn m0k_nonincreasing() {
    for l in [1.5, 2.0, 5.0] {
        let t = build_tables(&p(l), 27, 50).unwrap();
        for k in 1..=50 {
            assert!(t.m(0, k).unwrap() <= t.m(0, k - 1).unwrap(), "λ'={l} k={k}");
        }
    }
}

#[test]
fn mean_frozen_values() {
    for (l, v) in [(1.5, 2.97082489980), (2.0, 4.12288289562598), (3.0, 8.14030998407), (5.0, 35.8848034445), (6.0, 79.6062290516)] {
        let (m, b) = mean_hops_closed(&p(l)).unwrap();
        assert_eq!(b, MeanBranch::Radical);
        assert!(close(m, v, 1e-9 * v), "λ'={l}: {m}");
    }
    let (m, b) = mean_hops_closed(&p(1.2)).unwrap();
    assert_eq!(b, MeanBranch::Trig);
    assert!(close(m, 2.44346809705, 1e-9), "{m}");
}

#[test]
fn mean_closed_matches_pmf() {
    for l in [0.8, 1.2, 2.0, 3.0] {
        let q = p(l);
        let d = hop_pmf_poisson_to_tail(&q, 1e-13, 1 << 11).unwrap();
        let (m, _) = mean_hops_closed(&q).unwrap();
        assert!(close(d.mean_hops().unwrap().mean, m, 1e-6 * m.max(1.0)), "λ'={l}: {} vs {m}", d.mean_hops().unwrap().mean);
    }
}

#[test]
fn mean_branches_meet_at_ln4() {
    let ln4 = 4f64.ln();
    let above = mean_hops_radical(&p(ln4 + 1e-4)).unwrap();
    let below = mean_hops_trig(&p(ln4 - 1e-4)).unwrap();
    assert!(close(above, 2.7590709, 1e-6), "{above}");
    assert!(close(below, 2.7587118, 1e-6), "{below}");
    assert!((above - below).abs() < 1e-3);
    assert!(mean_hops_radical(&p(1.2)).is_err());
    assert!(mean_hops_trig(&p(2.0)).is_err());
}

#[test]
fn q_at_one_is_one() {
    for l in [1.5, 2.0, 3.0, 6.0] {
        let q = p(l);
        assert!(close(q_transform(&q, 1.0).unwrap(), 1.0, 1e-12), "λ'={l}");
        assert!(close(q_transform_variant(&q, 1.0, ClosedFormVariant::AsPrinted).unwrap(), 1.0, 1e-12));
    }
}

#[test]
fn q_derivative_is_mean() {
    for l in [2.0, 3.0] {
        let q = p(l);
        let (m, _) = mean_hops_closed(&q).unwrap();
        let h = 1e-6;
        let d = (q_transform(&q, 1.0 + h).unwrap() - q_transform(&q, 1.0 - h).unwrap()) / (2.0 * h);
        assert!(close(d, m, 1e-5), "λ'={l}: {d} vs {m}");
        assert!(close(factorial_moment(&q, 1).unwrap(), m, 1e-8));
    }
}

#[test]
fn second_factorial_moment_matches_pmf() {
    let q = p(3.0);
    let d = hop_pmf_poisson_to_tail(&q, 1e-13, 1 << 11).unwrap();
    let direct: f64 = d.pmf.iter().enumerate().map(|(i, v)| ((i + 1) * i) as f64 * v).sum();
    let fm = factorial_moment(&q, 2).unwrap();
    assert!(close(fm, direct, 1e-6 * direct), "{fm} vs {direct}");
}

#[test]
fn m1_closed_vs_series_and_table() {
    let q = p(3.0);
    let closed = m1_closed_form(&q, 0.5).unwrap();
    let series = m1_series(&q, 0.5, 200).unwrap();
    assert!(close(closed, 0.6104973812087822538, 1e-13), "{closed}");
    assert!(close(closed, series, 1e-8), "{closed} vs {series}");
    let t = build_tables(&q, 60, 110).unwrap();
    let power: f64 = (1..=110).map(|k| t.m(1, k).unwrap() * 0.5f64.powi(k as i32)).sum();
    assert!(close(closed, power, 1e-12), "{closed} vs {power}");
    let printed = m1_closed_form_variant(&q, 0.5, ClosedFormVariant::AsPrinted).unwrap();
    assert!((printed - closed).abs() > 0.1, "{printed}");
}

#[test]
fn m1_series_other_points() {
    for (l, z) in [(2.0, 1.0), (2.0, 0.8), (5.0, 1.2), (1.5, 0.9), (1.5, 1.0)] {
        let q = p(l);
        let c = m1_closed_form(&q, z).unwrap();
        let s = m1_series(&q, z, SERIES_MAX_TERMS).unwrap();
        assert!(close(c, s, 1e-8 * c.abs().max(1.0)), "λ'={l} z={z}: {c} vs {s}");
    }
}

#[test]
fn m1_series_refuses_outside_region() {
    // ln 4 + 2 ln z bounds λ' from below: 1.2 < ln 4 at z = 1, and
    // 1.5 < ln 4 + 2 ln 1.1.
    assert!(matches!(m1_series(&p(1.2), 1.0, 200), Err(Error::Convergence(_))));
    assert!(matches!(m1_series(&p(1.5), 1.1, 200), Err(Error::Convergence(_))));
    assert!(m1_series(&p(1.5), 1.0, SERIES_MAX_TERMS).is_ok());
    assert!(m1_closed_form(&p(1.5), 1.0).is_ok());
    assert!(m1_series(&p(2.0), 0.5, 0).is_err());
    assert!(m1_series(&p(2.0), 0.5, SERIES_MAX_TERMS + 1).is_err());
    assert_eq!(m1_series(&p(2.0), 0.0, 10).unwrap(), 0.0);
}

#[test]
fn series_identities() {
    for (l, z) in [(3.0, 0.5), (2.0, 1.0), (4.0, 1.3)] {
        let s = identity_sums(&p(l), z, SERIES_MAX_TERMS).unwrap();
        let tol = 1e-11;
        assert!(close(s.sum_c, s.sum_c_closed, tol), "{l} {z}: {s:?}");
        assert!(close(s.sum_b, s.sum_b_closed, tol), "{l} {z}: {s:?}");
        assert!(close(s.sum_u1_odd, s.sum_u1_odd_closed, tol), "{l} {z}: {s:?}");
        assert!(close(s.sum_u2_even, s.sum_u2_even_closed, tol), "{l} {z}: {s:?}");
    }
    let s = identity_sums(&p(3.0), 0.5, 200).unwrap();
    assert!(close(s.sum_u1_odd, -0.01289141254426248419, 1e-15));
    assert!(close(s.sum_u2_even, -0.0057394573108079056595, 1e-15));
}

#[test]
fn printed_f_breaks_c_identity() {
    let q = p(3.0);
    let z = 0.5;
    let g = aux_g(&q, z);
    let series = identity_sums(&q, z, 200).unwrap().sum_c;
    let wrong = aux_f_as_printed(&q, z) * g * g / (4.0 * q.rho_prime() * z * z * z);
    assert!((wrong - series).abs() > 1e-3, "{wrong} {series}");
    let right = aux_f(&q, z) * g * g / (4.0 * q.rho_prime() * z * z * z);
    assert!(close(right, series, 1e-14));
}

#[test]
fn odd_and_even_sums_factorize() {
    // A_i^(o) = f (g/2)^i for i ≥ 1, A_0^(o) = f - z, A^(e) = z A^(o).
    let q = p(2.5);
    let z = 0.9;
    let (f, g) = (aux_f(&q, z), aux_g(&q, z));
    assert!(close(a_odd_partial(&q, 0, z, 10_000), f - z, 1e-13));
    assert!(close(a_even_partial(&q, 0, z, 10_000), z * (f - z), 1e-13));
    for i in 1..6 {
        let want = f * (g / 2.0).powi(i as i32);
        assert!(close(a_odd_partial(&q, i, z, 10_000), want, 1e-13), "i={i}");
        assert!(close(a_even_partial(&q, i, z, 10_000), z * want, 1e-13), "i={i}");
    }
}

#[test]
fn coefficient_helpers() {
    let q = p(2.0);
    assert_eq!(binomial(10, 3), 120.0);
    assert!(close(binomial(80, 40) / 1.0750720873e23, 1.0, 1e-9));
    assert_eq!(a_odd(&q, 0, 0), 0.0);
    assert!(close(a_odd(&q, 1, 0), q.rho_prime(), 1e-16));
    assert!(close(a_odd(&q, 2, 1), -q.rho_prime().powi(2) * 2.0, 1e-16));
    assert_eq!(a_even(&q, 1, 0), 0.0);
    assert!(close(a_even(&q, 2, 0), q.rho_prime(), 1e-16));
    let c = series_coeffs(&q, 5);
    assert_eq!(c.b[0], 1.0);
    assert!(close(c.c[1], q.rho_prime(), 1e-16));
    assert!(close(c.c[2], 3.0 * q.rho_prime().powi(2), 1e-16));
    // b_1 = ρ'(C(2,1) - λ' C(1,1))
    assert!(close(c.b[1], q.rho_prime() * (2.0 - 2.0), 1e-16));
    let b2 = q.rho_prime().powi(2) * (6.0 - 2.0 * 3.0 + 2.0 * 1.0);
    assert!(close(c.b[2], b2, 1e-16));
}

#[test]
fn pgf_coefficients_match_pmf() {
    let q = p(2.0);
    let coeffs = pgf_coefficients(&q, 8, 1e-3).unwrap();
    let d = hop_pmf_poisson(&q, 8).unwrap();
    assert!(coeffs[0].abs() < 1e-4);
    for k in 1..=8 {
        assert!(close(coeffs[k], d.p(k), 1e-4), "k={k}: {} vs {}", coeffs[k], d.p(k));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pmf_is_a_distribution(l in 0.3f64..8.0) {
        let d = hop_pmf_poisson(&p(l), 60).unwrap();
        prop_assert!(d.pmf.iter().all(|&v| v >= 0.0));
        let s: f64 = d.pmf.iter().sum();
        prop_assert!((s + d.tail_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_increases_with_lambda(l in 0.3f64..7.0) {
        let (a, _) = mean_hops_closed(&p(l)).unwrap();
        let (b, _) = mean_hops_closed(&p(l * 1.05)).unwrap();
        prop_assert!(b > a);
    }
}
