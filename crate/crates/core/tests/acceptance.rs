//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use common::{bfs_path_nodes, poisson_anchors, sup_distance};
use hopcalc::components::{hop_density, mean_component_length, vehicle_count_mean};
use hopcalc::hops::{hop_pmf_montecarlo, DEFAULT_K_MAX};
use hopcalc::models::{presets, EmConfig};
use hopcalc::poisson::{
    build_tables, hop_pmf_poisson, hop_pmf_poisson_to_tail, identity_sums, m1_closed_form, m1_series,
    m_alpha_k_oracle_grid, mean_hops_closed, mean_hops_radical, mean_hops_trig, q_transform, seed_row_m,
    PoissonParams, SeedVariant,
};
use hopcalc::road::{conditional_relay_gaps, generate_road, simulate_stats, split_components};
use hopcalc::stats::ks_statistic;
use hopcalc::trace::{compare_report, synthesize_trace, CompareConfig, SynthSpec};
use hopcalc::{InterdistanceModel, KernelMode, RelayKernel};
use std::time::Instant;

const R: f64 = 100.0;

/// Collects the sub-checks of one criterion.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }
}

fn p(l: f64) -> PoissonParams {
    PoissonParams::new(l).unwrap()
}

fn poisson_model(lambda_prime: f64) -> InterdistanceModel {
    InterdistanceModel::exponential(lambda_prime / R).unwrap()
}

fn within_sigma(estimate: f64, truth: f64, sigma: f64, n_sigma: f64) -> bool {
    (estimate - truth).abs() <= n_sigma * sigma
}

fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn criterion_1(c: &mut Checks) {
    let start = Instant::now();
    for (i, lp) in [1.0, 2.0, 4.0].into_iter().enumerate() {
        let exact = poisson_anchors(lp);
        let d = hop_pmf_poisson(&p(lp), 8).unwrap();
        for k in 0..2 {
            let err = (d.pmf[k] - exact[k]).abs();
            c.check(err <= 1e-12, format!("λ'={lp}: analytic P(N_b={}) off by {err:e}", k + 1));
        }
        let (mean, _) = mean_hops_closed(&p(lp)).unwrap();

        let kernel = RelayKernel::new(poisson_model(lp), R, KernelMode::ClosedFormPoisson).unwrap();
        let n = 1_000_000;
        let mc = hop_pmf_montecarlo(&kernel, n, DEFAULT_K_MAX, 100 + i as u64).unwrap();
        for k in 0..2 {
            let ok = within_sigma(mc.pmf[k], exact[k], binomial_sigma(exact[k], n), 3.0);
            c.check(ok, format!("λ'={lp}: chains P(N_b={}) = {} vs {}", k + 1, mc.pmf[k], exact[k]));
        }
        let mh = mc.mean_hops().unwrap();
        c.check(
            within_sigma(mh.mean, mean, mh.stderr.unwrap(), 3.0),
            format!("λ'={lp}: chains mean {} vs {mean}", mh.mean),
        );

        let n = 100_000;
        let sim = simulate_stats(&poisson_model(lp), R, n, 200 + i as u64).unwrap();
        let pmf = sim.pmf();
        for k in 0..2 {
            let ok = within_sigma(pmf[k], exact[k], binomial_sigma(exact[k], n), 3.0);
            c.check(ok, format!("λ'={lp}: road P(N_b={}) = {} vs {}", k + 1, pmf[k], exact[k]));
        }
        c.check(
            within_sigma(sim.mean_hops.value, mean, sim.mean_hops.stderr, 3.0),
            format!("λ'={lp}: road mean {} vs {mean}", sim.mean_hops.value),
        );
    }
    let secs = start.elapsed().as_secs_f64();
    c.check(secs < 60.0, format!("runtime {secs:.1} s"));
    c.note(format!("{secs:.1} s"));
}

fn criterion_2(c: &mut Checks) {
    for (i, lp) in [1.5, 2.0, 3.0, 5.0].into_iter().enumerate() {
        let d = hop_pmf_poisson_to_tail(&p(lp), 1e-9, 4096).unwrap();
        c.check(d.tail_mass <= 1e-9, format!("λ'={lp}: tail {:e}", d.tail_mass));
        let from_pmf: f64 = d.pmf.iter().enumerate().map(|(k, q)| (k + 1) as f64 * q).sum();
        let (closed, _) = mean_hops_closed(&p(lp)).unwrap();
        let err = (from_pmf - closed).abs();
        c.check(err <= 1e-6, format!("λ'={lp}: pmf mean {from_pmf} vs closed {closed}"));
        let sim = simulate_stats(&poisson_model(lp), R, 100_000, 300 + i as u64).unwrap();
        let (lo, hi) = sim.mean_hops.ci95();
        c.check(lo <= closed && closed <= hi, format!("λ'={lp}: road 95% CI [{lo}, {hi}] misses {closed}"));
    }
    let (m6, _) = mean_hops_closed(&p(6.0)).unwrap();
    c.check((m6 / 80.0 - 1.0).abs() <= 0.02 && (m6 - 79.8).abs() < 0.5, format!("λ'=6 mean {m6}"));
    c.note(format!("E[N_b] at λ'=6: {m6:.4}"));
}

fn criterion_3(c: &mut Checks) {
    let ln4 = 4f64.ln();
    let above = mean_hops_radical(&p(ln4 + 1e-4)).unwrap();
    let below = mean_hops_trig(&p(ln4 - 1e-4)).unwrap();
    c.check((above - below).abs() <= 1e-3, format!("radical {above} vs trig {below}"));
    c.note(format!("radical {above:.7}, trig {below:.7}"));
}

fn criterion_4(c: &mut Checks) {
    let q = p(3.0);
    let series = m1_series(&q, 0.5, 200).unwrap();
    let closed = m1_closed_form(&q, 0.5).unwrap();
    c.check((series - closed).abs() <= 1e-8, format!("M1 series {series} vs closed {closed}"));

    let s = identity_sums(&q, 0.5, 200).unwrap();
    for (name, a, b) in [
        ("c-sum", s.sum_c, s.sum_c_closed),
        ("b-sum", s.sum_b, s.sum_b_closed),
        ("odd u-sum", s.sum_u1_odd, s.sum_u1_odd_closed),
        ("even u-sum", s.sum_u2_even, s.sum_u2_even_closed),
    ] {
        c.check((a - b).abs() <= 1e-10, format!("{name}: {a} vs {b}"));
    }

    for lp in [1.5, 2.0, 3.0, 6.0] {
        let q = p(lp);
        let q1 = q_transform(&q, 1.0).unwrap();
        c.check((q1 - 1.0).abs() <= 1e-9, format!("λ'={lp}: Q(1) = {q1}"));
        let h = 1e-6;
        let fd = (q_transform(&q, 1.0 + h).unwrap() - q_transform(&q, 1.0 - h).unwrap()) / (2.0 * h);
        let (mean, _) = mean_hops_closed(&q).unwrap();
        c.check((fd - mean).abs() <= 1e-5, format!("λ'={lp}: Q'(1) ≈ {fd} vs {mean}"));
    }
}

fn criterion_5(c: &mut Checks) {
    let n = 10_000_000;
    let mut worst: f64 = 0.0;
    for (i, lp) in [1.5, 2.0, 4.0].into_iter().enumerate() {
        let q = p(lp);
        let grid = m_alpha_k_oracle_grid(&q, 4, 6, n, 500 + i as u64).unwrap();
        for alpha in 0..=4 {
            let (m1, m2) = seed_row_m(&q, alpha, SeedVariant::Corrected);
            for (k, m) in [(1, m1), (2, m2)] {
                let e = grid[k][alpha];
                let z = (e.value - m).abs() / e.stderr;
                worst = worst.max(z);
                c.check(z <= 3.0, format!("λ'={lp}: M[{alpha},{k}] seed {m} vs oracle {} ({z:.1}σ)", e.value));
            }
        }
        let table = build_tables(&q, 6, 6).unwrap();
        for k in 1..=6 {
            let m = table.m(1, k).unwrap();
            let e = grid[k][1];
            let z = (e.value - m).abs() / e.stderr;
            worst = worst.max(z);
            c.check(z <= 3.0, format!("λ'={lp}: M[1,{k}] table {m} vs oracle {} ({z:.1}σ)", e.value));
        }
    }
    c.note(format!("largest deviation {worst:.2}σ"));
}

fn criterion_6(c: &mut Checks) {
    let model = presets::burst_a();
    let x_prev = 80.0;
    let closed = RelayKernel::new(model.clone(), R, KernelMode::ClosedFormHyperexp2).unwrap();
    let numerical = RelayKernel::numerical(model.clone(), R).unwrap();
    let sup = sup_distance(
        |x| closed.tau_cond_cdf(x_prev, x).unwrap(),
        |x| numerical.tau_cond_cdf(x_prev, x).unwrap(),
        0.0,
        400.0,
        4001,
    );
    c.check(sup <= 1e-3, format!("hyperexp closed vs renewal sup {sup:e}"));

    let mut gaps = conditional_relay_gaps(&model, R, x_prev, 100_000, 600).unwrap();
    let ks = ks_statistic(&mut gaps, |x| closed.tau_cond_cdf(x_prev, x).unwrap());
    c.check(ks <= 0.01, format!("simulated transitions KS {ks}"));

    let poisson = poisson_model(3.0);
    let closed = RelayKernel::new(poisson.clone(), R, KernelMode::ClosedFormPoisson).unwrap();
    let numerical = RelayKernel::numerical(poisson, R).unwrap();
    let mut sup_p: f64 = 0.0;
    for xp in [10.0, 50.0, 80.0, 100.0] {
        sup_p = sup_p.max(sup_distance(
            |x| closed.tau_cond_cdf(xp, x).unwrap(),
            |x| numerical.tau_cond_cdf(xp, x).unwrap(),
            0.0,
            400.0,
            4001,
        ));
    }
    c.check(sup_p <= 1e-4, format!("Poisson closed vs renewal sup {sup_p:e}"));
    c.note(format!("sup {sup:.1e}, KS {ks:.4}, Poisson sup {sup_p:.1e}"));
}

fn criterion_7(c: &mut Checks) {
    let configs = [("0.95", presets::burst_a()), ("0.90", presets::burst_b()), ("0.05", presets::burst_c())];
    let mut worst: f64 = 0.0;
    let mut misordered = Vec::new();
    for (j, r) in (1..=10).map(|i| i as f64 * 10.0).enumerate() {
        let mut means = Vec::new();
        for (i, (name, model)) in configs.iter().enumerate() {
            let seed = 700 + 10 * j as u64 + i as u64;
            let kernel = RelayKernel::auto(model.clone(), r).unwrap();
            let mc = hop_pmf_montecarlo(&kernel, 100_000, DEFAULT_K_MAX, seed).unwrap().mean_hops().unwrap().mean;
            let sim = simulate_stats(model, r, 100_000, seed + 5).unwrap().mean_hops.value;
            let rel = (mc / sim - 1.0).abs();
            worst = worst.max(rel);
            c.check(rel <= 0.02, format!("α1={name}, R={r}: chains {mc} vs road {sim}"));
            means.push(mc);
        }
        // Most bursty first: means must increase.
        if !(means[0] < means[1] && means[1] < means[2]) {
            misordered.push(format!("R={r} {:.3}/{:.3}/{:.3}", means[0], means[1], means[2]));
        }
    }
    c.check(misordered.is_empty(), format!("not ordered by burstiness at {}", misordered.join(", ")));
    c.note(format!("largest chains/road gap {:.2}%", 100.0 * worst));
}

fn criterion_8(c: &mut Checks) {
    let lambda = 0.02;
    let sim = simulate_stats(&InterdistanceModel::exponential(lambda).unwrap(), R, 100_000, 800).unwrap();
    let e2 = 2f64.exp();
    let l_cc = (e2 - 1.0) / lambda;
    let v = sim.mean_vehicles.value;
    let l = sim.mean_length.value;
    c.check((v / e2 - 1.0).abs() <= 0.02, format!("mean vehicles {v} vs {e2}"));
    c.check((l / l_cc - 1.0).abs() <= 0.02, format!("mean L_cc {l} vs {l_cc}"));
    c.check((l_cc - 319.45).abs() < 0.01, format!("closed L_cc {l_cc}"));

    let poisson = InterdistanceModel::exponential(lambda).unwrap();
    let pk = RelayKernel::new(poisson.clone(), R, KernelMode::ClosedFormPoisson).unwrap();
    for degenerate in [
        InterdistanceModel::hyperexponential(vec![1.0], vec![lambda]).unwrap(),
        InterdistanceModel::hyperexponential(vec![1.0, 0.0], vec![lambda, 0.005]).unwrap(),
    ] {
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        let lh = mean_component_length(&degenerate, R).unwrap();
        c.check(rel(lh, l_cc) <= 1e-12, format!("degenerate L_cc {lh} vs {l_cc}"));
        let vh = vehicle_count_mean(degenerate.cdf(R)).unwrap();
        c.check(rel(vh, e2) <= 1e-12, format!("degenerate vehicle mean {vh} vs {e2}"));
        let hk = RelayKernel::new(degenerate, R, KernelMode::ClosedFormHyperexp2).unwrap();
        let sup = sup_distance(|x| hk.tau_cond_cdf(60.0, x).unwrap(), |x| pk.tau_cond_cdf(60.0, x).unwrap(), 0.0, 300.0, 3001)
            .max(sup_distance(|x| hk.tau1_cdf(x).unwrap(), |x| pk.tau1_cdf(x).unwrap(), 0.0, 300.0, 3001));
        c.check(sup <= 1e-12, format!("degenerate kernel sup {sup:e}"));
    }
    c.note(format!("vehicles {v:.4}, L_cc {l:.2} m"));
}

fn criterion_9(c: &mut Checks) {
    let empirical = {
        let mut rng = hopcalc::rng::substream(900, 0);
        let base = presets::f11h();
        InterdistanceModel::empirical((0..5000).map(|_| base.sample(&mut rng).round().max(1.0)).collect()).unwrap()
    };
    let models = [presets::f8h(), presets::burst_c(), poisson_model(2.5), empirical];
    let radii = [20.0, 50.0, 80.0];
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    let mut round = 0u64;
    while checked < 10_000 {
        let model = &models[round as usize % models.len()];
        let r = radii[(round as usize / models.len()) % radii.len()];
        let road = generate_road(model, 20_000, 910 + round).unwrap();
        let pos = road.positions();
        for comp in split_components(pos, r).unwrap().into_iter().filter(|c| c.n_vehicles >= 2) {
            if checked == 10_000 {
                break;
            }
            let bfs = bfs_path_nodes(&pos[comp.start..=comp.end], r);
            if bfs != Some(comp.path_nodes) {
                mismatches += 1;
            }
            checked += 1;
        }
        round += 1;
    }
    c.check(mismatches == 0, format!("{mismatches} of {checked} components differ from BFS"));
    c.note(format!("{checked} components, {mismatches} mismatches"));
}

fn criterion_10(c: &mut Checks, suite_start: Instant) {
    let radii: Vec<f64> = (1..=10).map(|i| i as f64 * 10.0).collect();
    for (i, (name, truth)) in [("F8h", presets::f8h()), ("F11h", presets::f11h())].into_iter().enumerate() {
        let spec = SynthSpec { road_length: 1_000_000.0, duration: 39.0 * 60.0, step: 60.0 };
        let data = synthesize_trace(&truth, &spec, 1000 + i as u64).unwrap();
        let cfg = CompareConfig {
            em: EmConfig { max_samples: Some(200_000), seed: 1010 + i as u64, ..EmConfig::default() },
            chains: 100_000,
            sim_components: 100_000,
            seed: 1020 + i as u64,
            ..CompareConfig::default()
        };
        let report = compare_report(&data, &radii, &cfg).unwrap();
        let fit = &report.fit.model;
        let sup = sup_distance(|x| fit.cdf(x), |x| truth.cdf(x), 0.0, 400.0, 8001);
        c.check(sup <= 0.005, format!("{name}: EM sup distance {sup}"));
        let mut worst: f64 = 0.0;
        for row in &report.rows {
            let Some(trace) = row.mean_nb_trace else {
                c.check(false, format!("{name}, R={}: no complete component in the trace", row.radius));
                continue;
            };
            let cols = [trace.value, row.mean_nb_model.value, row.mean_nb_sim.value];
            let lo = cols.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = cols.iter().copied().fold(0.0, f64::max);
            worst = worst.max(hi / lo - 1.0);
            c.check(hi / lo - 1.0 <= 0.03, format!("{name}, R={}: columns {cols:?}", row.radius));
        }
        c.note(format!("{name}: EM sup {sup:.4}, columns within {:.2}%", 100.0 * worst));
    }

    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut outside = Vec::new();
    for (i, (name, model)) in [
        ("0.95", presets::burst_a()),
        ("0.9", presets::burst_b()),
        ("0.8", presets::burst_d()),
        ("0.05", presets::burst_c()),
    ]
    .into_iter()
    .enumerate()
    {
        for (j, &r) in radii.iter().enumerate() {
            let kernel = RelayKernel::auto(model.clone(), r).unwrap();
            let seed = 1100 + 10 * i as u64 + j as u64;
            let m = hop_pmf_montecarlo(&kernel, 40_000, DEFAULT_K_MAX, seed).unwrap().mean_hops().unwrap().mean;
            let d = hop_density(m, mean_component_length(&model, r).unwrap(), r).unwrap();
            lo = lo.min(d);
            hi = hi.max(d);
            if !(1.0..=1.25).contains(&d) {
                outside.push(format!("α1={name} R={r}: {d:.3}"));
            }
        }
    }
    c.check(outside.is_empty(), format!("density outside [1, 1.25]: {}", outside.join(", ")));
    c.note(format!("densities span [{lo:.3}, {hi:.3}]"));

    let total = suite_start.elapsed().as_secs_f64();
    c.check(total <= 600.0, format!("suite took {total:.0} s"));
    c.note(format!("suite {total:.0} s"));
}

fn main() {
    let suite_start = Instant::now();
    let criteria: [(&str, Box<dyn Fn(&mut Checks)>); 10] = [
        ("exact anchors", Box::new(criterion_1)),
        ("mean consistency", Box::new(criterion_2)),
        ("branch continuity at ln 4", Box::new(criterion_3)),
        ("transform stack coherence", Box::new(criterion_4)),
        ("oracle adjudication of seeds", Box::new(criterion_5)),
        ("relay kernel validation", Box::new(criterion_6)),
        ("hyperexponential curves and ordering", Box::new(criterion_7)),
        ("component statistics", Box::new(criterion_8)),
        ("greedy optimality", Box::new(criterion_9)),
        ("trace pipeline self-consistency", Box::new(move |c: &mut Checks| criterion_10(c, suite_start))),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut c = Checks::default();
        run(&mut c);
        let verdict = if c.failures.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2}: {verdict} {title} ({:.1} s){}",
            i + 1,
            start.elapsed().as_secs_f64(),
            if c.notes.is_empty() { String::new() } else { format!("; {}", c.notes.join("; ")) }
        );
        for f in &c.failures {
            println!("    {f}");
        }
        if !c.failures.is_empty() {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} of 10 criteria failed");
        std::process::exit(1);
    }
}
