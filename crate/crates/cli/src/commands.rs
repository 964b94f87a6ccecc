//! Command implementations.

use crate::cli::*;
use crate::config::{Grid, List, PathArg, Resolver};
use crate::error::CliError;
use crate::output::{num, Report, Table};
use hopcalc::components::{hop_density, mean_component_length};
use hopcalc::hops::{hop_distribution_quadrature, hop_pmf_montecarlo, DEFAULT_K_MAX};
use hopcalc::models::{fit_hyperexponential, presets, read_samples, EmConfig};
use hopcalc::poisson::{build_tables, hop_pmf_poisson, hop_pmf_poisson_to_tail, mean_hops_closed, PoissonParams};
use hopcalc::road::simulate_stats;
use hopcalc::stats::ks_statistic;
use hopcalc::trace::{
    compare_report, interdistances, load_traces, preprocess, save_traces, synthesize_trace, CompareConfig,
    SynthSpec, TraceDataset,
};
use hopcalc::{InterdistanceModel, KernelMode, ModelKind, RelayKernel};
use std::path::Path;

type Out = Result<Report, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Preset name, inline `kind=...` spec, or a file holding either a spec line,
/// a fitted-mixture CSV written by `fit`, or raw gaps (one per line).
pub fn resolve_model(arg: &str) -> Result<InterdistanceModel, CliError> {
    if let Some(m) = presets::by_name(arg) {
        return Ok(m);
    }
    if arg.contains("kind=") {
        return arg.parse().map_err(|e: hopcalc::Error| config_err(format!("model `{arg}`: {e}")));
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(config_err(format!(
            "model `{arg}` is neither a preset ({}), an inline spec nor an existing file",
            presets::NAMES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path)?;
    let lines: Vec<&str> =
        text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
    match lines.first() {
        Some(l) if l.contains("kind=") => Ok(l.parse()?),
        Some(l) if l.starts_with("component,") => {
            let mut weights = Vec::new();
            let mut means = Vec::new();
            for (i, row) in lines[1..].iter().enumerate() {
                let f: Vec<&str> = row.split(',').collect();
                let parse = |j: usize| -> Result<f64, CliError> {
                    f.get(j).and_then(|t| t.trim().parse().ok()).ok_or_else(|| {
                        CliError::Core(hopcalc::Error::Parse { line: i + 2, message: format!("bad mixture row {row:?}") })
                    })
                };
                weights.push(parse(1)?);
                means.push(parse(2)?);
            }
            Ok(InterdistanceModel::hyperexponential_means(weights, &means)?)
        }
        _ => Ok(InterdistanceModel::empirical(read_samples(text.as_bytes())?)?),
    }
}

fn mean_hops_for(
    model: &InterdistanceModel,
    radius: f64,
    samples: u64,
    k_max: usize,
    seed: u64,
) -> Result<(f64, f64, &'static str), CliError> {
    if let ModelKind::Exponential { rate } = model.kind() {
        let (m, _) = mean_hops_closed(&PoissonParams::from_rate(*rate, radius)?)?;
        return Ok((m, 0.0, "closed-form"));
    }
    let kernel = RelayKernel::auto(model.clone(), radius)?;
    let mh = hop_pmf_montecarlo(&kernel, samples, k_max, seed)?.mean_hops()?;
    Ok((mh.mean, mh.stderr.unwrap_or(0.0), "monte-carlo"))
}

fn sub_seed(seed: u64, i: usize) -> u64 {
    hopcalc::rng::mix(seed, i as u64)
}

pub fn pmf(a: PmfArgs, r: &mut Resolver) -> Out {
    let poisson = r.get("poisson", a.poisson, false)?;
    let method = r.get("method", a.method, "auto".to_string())?;
    let mut notes = Vec::new();
    if poisson {
        if !matches!(method.as_str(), "auto" | "recurrence") {
            return Err(config_err("with --poisson the method is `recurrence`"));
        }
        let lp = r.require("lambda_prime", a.lambda_prime)?;
        let params = PoissonParams::new(lp)?;
        let d = match r.opt("k_max", a.k_max)? {
            Some(k) => hop_pmf_poisson(&params, k)?,
            None => {
                let tol = r.get("tail_tol", a.tail_tol, 1e-12)?;
                hop_pmf_poisson_to_tail(&params, tol, 2048)?
            }
        };
        notes.push("method: exact recurrence".to_string());
        notes.push(format!("tail mass beyond k_max: {:e}", d.tail_mass));
        let mut t = Table::new(&["k", "p"])?;
        for (i, p) in d.pmf.iter().enumerate() {
            t.row([(i + 1).to_string(), num(*p)])?;
        }
        return Ok(Report { notes, body: t.into_bytes()? });
    }
    let model = resolve_model(&r.require::<String>("model", a.model)?)?;
    let radius = r.get("radius", a.radius, 100.0)?;
    let kernel = RelayKernel::auto(model, radius)?;
    let d = match method.as_str() {
        "auto" | "montecarlo" => {
            let samples = r.get("samples", a.samples, 1_000_000)?;
            let k_max = r.get("k_max", a.k_max, DEFAULT_K_MAX)?;
            let seed = r.seed(a.seed)?;
            hop_pmf_montecarlo(&kernel, samples, k_max, seed)?
        }
        "quadrature" => {
            let k_max = r.get("k_max", a.k_max, 5)?;
            let step = r.get("grid_step", a.grid_step, radius / 2000.0)?;
            hop_distribution_quadrature(&kernel, k_max, step)?
        }
        other => return Err(config_err(format!("unknown method `{other}`"))),
    };
    notes.push(format!("method: {:?}", d.method));
    notes.push(format!("kernel: {:?}", kernel.mode()));
    notes.push(format!("tail mass beyond k_max: {:e}", d.tail_mass));
    let mut t = Table::new(&["k", "p", "stderr"])?;
    for (i, p) in d.pmf.iter().enumerate() {
        let se = d.stderr.as_ref().map(|s| num(s[i])).unwrap_or_default();
        t.row([(i + 1).to_string(), num(*p), se])?;
    }
    Ok(Report { notes, body: t.into_bytes()? })
}

pub fn mean_sweep(a: MeanSweepArgs, r: &mut Resolver) -> Out {
    let poisson = r.get("poisson", a.poisson, false)?;
    if poisson {
        let grid = r.get("lambda_grid", a.lambda_grid, "0.5:6:0.5".parse::<Grid>().unwrap())?;
        let mut t = Table::new(&["lambda_prime", "mean", "branch"])?;
        for &lp in &grid.values {
            let (m, b) = mean_hops_closed(&PoissonParams::new(lp)?)?;
            t.row([num(lp), num(m), format!("{b:?}").to_lowercase()])?;
        }
        return Ok(Report { notes: vec!["mean from the closed form".into()], body: t.into_bytes()? });
    }
    let models = r.require::<List>("models", a.models)?;
    let grid = r.get("r_grid", a.r_grid, "10:100:10".parse::<Grid>().unwrap())?;
    let samples = r.get("samples", a.samples, 200_000)?;
    let k_max = r.get("k_max", a.k_max, DEFAULT_K_MAX)?;
    let simulate = r.get("simulate", a.simulate, false)?;
    let sim_components = if simulate { Some(r.get("sim_components", a.sim_components, 100_000)?) } else { None };
    let seed = r.seed(a.seed)?;
    let mut cols = vec!["model", "R", "mean_nb", "stderr", "method"];
    if simulate {
        cols.extend(["sim_mean_nb", "sim_ci_lo", "sim_ci_hi"]);
    }
    let mut t = Table::new(&cols)?;
    let mut job = 0;
    for name in &models.0 {
        let model = resolve_model(name)?;
        for &radius in &grid.values {
            let (m, se, how) = mean_hops_for(&model, radius, samples, k_max, sub_seed(seed, 2 * job))?;
            let mut row = vec![name.clone(), num(radius), num(m), num(se), how.to_string()];
            if let Some(n) = sim_components {
                let s = simulate_stats(&model, radius, n, sub_seed(seed, 2 * job + 1))?;
                let (lo, hi) = s.mean_hops.ci95();
                row.extend([num(s.mean_hops.value), num(lo), num(hi)]);
            }
            t.row(row)?;
            job += 1;
        }
    }
    Ok(Report { notes: vec![], body: t.into_bytes()? })
}

pub fn simulate(a: SimulateArgs, r: &mut Resolver) -> Out {
    let model = resolve_model(&r.require::<String>("model", a.model)?)?;
    let grid = r.get("r_grid", a.r_grid, "10:100:10".parse::<Grid>().unwrap())?;
    let n = r.get("components", a.components, 100_000)?;
    let seed = r.seed(a.seed)?;
    let mut t = Table::new(&["R", "mean_nb", "ci_lo", "ci_hi", "mean_lcc", "mean_vehicles"])?;
    for (i, &radius) in grid.values.iter().enumerate() {
        let s = simulate_stats(&model, radius, n, sub_seed(seed, i))?;
        let (lo, hi) = s.mean_hops.ci95();
        t.row([num(radius), num(s.mean_hops.value), num(lo), num(hi), num(s.mean_length.value), num(s.mean_vehicles.value)])?;
    }
    Ok(Report {
        notes: vec!["edge components of each simulated road are excluded; L_cc = span + R".into()],
        body: t.into_bytes()?,
    })
}

fn is_trace_file(path: &Path) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#')).is_some_and(|l| l.starts_with("time_s")))
}

fn load_merged(paths: &[String]) -> Result<TraceDataset, CliError> {
    let mut parts = Vec::new();
    for p in paths {
        let loaded = load_traces(Path::new(p), None)?;
        if loaded.malformed_rows > 0 {
            eprintln!("warning: {p}: skipped {} malformed rows", loaded.malformed_rows);
        }
        parts.push(loaded.dataset);
    }
    Ok(TraceDataset::merge(parts)?)
}

pub fn fit(a: FitArgs, r: &mut Resolver) -> Out {
    let input: PathArg = r.require("input", a.input)?;
    let format = r.get("input_format", a.input_format, "auto".to_string())?;
    let as_trace = match format.as_str() {
        "auto" => is_trace_file(&input.0)?,
        "trace" => true,
        "samples" => false,
        other => return Err(config_err(format!("unknown input format `{other}`"))),
    };
    let k = r.get("k", a.k, 2)?;
    let mut cfg = EmConfig {
        max_iter: r.get("max_iter", a.max_iter, EmConfig::default().max_iter)?,
        tol: r.get("tol", a.tol, EmConfig::default().tol)?,
        ..EmConfig::default()
    };
    if let Some(cap) = r.opt("max_samples", a.max_samples)? {
        cfg.max_samples = Some(cap);
        cfg.seed = r.seed(a.seed)?;
    }
    let mut notes = Vec::new();
    let gaps = if as_trace {
        let warmup = r.get("warmup", a.warmup, 600.0)?;
        let every = r.get("every", a.every, 600.0)?;
        let phase = r.get("phase", a.phase, 0.0)?;
        let d = load_merged(&[input.to_string()])?;
        let p = preprocess(&d, warmup, every, phase)?;
        notes.push(format!("snapshots kept: {} of {}", p.snapshots.len(), d.snapshots.len()));
        interdistances(&p)
    } else {
        read_samples(std::io::BufReader::new(std::fs::File::open(&input.0)?))?
    };
    let fit = fit_hyperexponential(&gaps, k, &cfg)?;
    let mut sorted = gaps.clone();
    let ks = ks_statistic(&mut sorted, |x| fit.model.cdf(x));
    notes.push(format!("model {}", fit.model));
    notes.push(format!("gaps: {}", gaps.len()));
    notes.push(format!(
        "iterations: {}; converged: {}; log-likelihood: {}",
        fit.iterations,
        fit.converged,
        fit.log_likelihood.last().copied().unwrap_or(f64::NAN)
    ));
    notes.push(format!("sup distance to the empirical CDF: {ks}"));
    let (w, rates) = fit.model.mixture().expect("fitted model is a mixture");
    let mut t = Table::new(&["component", "weight", "mean", "rate"])?;
    for (i, (w, l)) in w.iter().zip(&rates).enumerate() {
        t.row([(i + 1).to_string(), num(*w), num(1.0 / l), num(*l)])?;
    }
    Ok(Report { notes, body: t.into_bytes()? })
}

pub fn compare(a: CompareArgs, r: &mut Resolver) -> Out {
    let traces = r.require::<List>("traces", a.traces)?;
    let warmup = r.get("warmup", a.warmup, 600.0)?;
    let every = r.get("every", a.every, 600.0)?;
    let phase = r.get("phase", a.phase, 0.0)?;
    let grid = r.get("r_grid", a.r_grid, "10:100:10".parse::<Grid>().unwrap())?;
    let defaults = CompareConfig::default();
    let cfg = CompareConfig {
        components: r.get("k", a.k, defaults.components)?,
        em: EmConfig {
            max_iter: r.get("max_iter", a.max_iter, defaults.em.max_iter)?,
            tol: r.get("tol", a.tol, defaults.em.tol)?,
            ..defaults.em
        },
        chains: r.get("chains", a.chains, defaults.chains)?,
        sim_components: r.get("sim_components", a.sim_components, defaults.sim_components)?,
        k_max: defaults.k_max,
        seed: r.seed(a.seed)?,
    };
    let data = preprocess(&load_merged(&traces.0)?, warmup, every, phase)?;
    let report = compare_report(&data, &grid.values, &cfg)?;
    let mut t = Table::new(&["R", "mean_nb_trace", "mean_nb_model", "mean_nb_sim", "trace_components"])?;
    for row in &report.rows {
        t.row([
            num(row.radius),
            row.mean_nb_trace.map(|e| num(e.value)).unwrap_or_default(),
            num(row.mean_nb_model.value),
            num(row.mean_nb_sim.value),
            row.trace_components.to_string(),
        ])?;
    }
    Ok(Report {
        notes: vec![
            format!("fitted model {}", report.fit.model),
            format!("snapshots used: {}", data.snapshots.len()),
        ],
        body: t.into_bytes()?,
    })
}

pub fn density(a: DensityArgs, r: &mut Resolver) -> Out {
    let models = r.get("models", a.models, "burst-a | burst-b | burst-c | burst-d".parse::<List>().unwrap())?;
    let grid = r.get("r_grid", a.r_grid, "10:100:10".parse::<Grid>().unwrap())?;
    let samples = r.get("samples", a.samples, 200_000)?;
    let k_max = r.get("k_max", a.k_max, DEFAULT_K_MAX)?;
    let seed = r.seed(a.seed)?;
    let mut t = Table::new(&["model", "R", "mean_nb", "mean_lcc", "density"])?;
    let mut job = 0;
    for name in &models.0 {
        let model = resolve_model(name)?;
        for &radius in &grid.values {
            let (m, _, _) = mean_hops_for(&model, radius, samples, k_max, sub_seed(seed, job))?;
            let l = mean_component_length(&model, radius)?;
            t.row([name.clone(), num(radius), num(m), num(l), num(hop_density(m, l, radius)?)])?;
            job += 1;
        }
    }
    Ok(Report {
        notes: vec!["density = E[N_b] / (E[L_cc] / R), lengths in units of R".into()],
        body: t.into_bytes()?,
    })
}

pub fn kernel_dump(a: KernelDumpArgs, r: &mut Resolver) -> Out {
    let model = resolve_model(&r.require::<String>("model", a.model)?)?;
    let radius = r.get("radius", a.radius, 100.0)?;
    let x_prev = r.opt("x_prev", a.x_prev)?;
    let mode = r.get("mode", a.mode, "auto".to_string())?;
    let kernel = match mode.as_str() {
        "auto" => RelayKernel::auto(model, radius)?,
        "numerical" => {
            let step = r.get("step", a.step, radius / 1000.0)?;
            let cap = radius + 20.0 * model.mean();
            RelayKernel::new(model, radius, KernelMode::NumericalRenewal { step, cap })?
        }
        other => return Err(config_err(format!("unknown kernel mode `{other}`"))),
    };
    let x_max = r.get("x_max", a.x_max, 2.0 * radius)?;
    let points = r.get("points", a.points, 401)?;
    if points < 2 || !(x_max > 0.0) {
        return Err(config_err("need points ≥ 2 and x-max > 0"));
    }
    let mut t = Table::new(&["x", "cdf"])?;
    for i in 0..points {
        let x = x_max * i as f64 / (points - 1) as f64;
        let c = match x_prev {
            Some(xp) => kernel.tau_cond_cdf(xp, x)?,
            None => kernel.tau1_cdf(x)?,
        };
        t.row([num(x), num(c)])?;
    }
    let exit = kernel.exit_probability(x_prev.unwrap_or(radius))?;
    Ok(Report {
        notes: vec![format!("kernel: {:?}", kernel.mode()), format!("probability the next gap exceeds R: {exit}")],
        body: t.into_bytes()?,
    })
}

pub fn tables_dump(a: TablesDumpArgs, r: &mut Resolver) -> Out {
    let lp = r.require("lambda_prime", a.lambda_prime)?;
    let k_max = r.get("k_max", a.k_max, 40)?;
    let alpha_max = r.get("alpha_max", a.alpha_max, k_max / 2 + 3)?;
    let t = build_tables(&PoissonParams::new(lp)?, alpha_max, k_max)?;
    let mut out = Table::new(&["alpha", "k", "M", "u"])?;
    for k in 0..=k_max {
        for alpha in 0..=t.depth(k).unwrap_or(0) {
            out.row([alpha.to_string(), k.to_string(), num(t.m(alpha, k).unwrap()), num(t.u(alpha, k).unwrap())])?;
        }
    }
    Ok(Report { notes: vec![format!("working precision: {} bits", t.precision())], body: out.into_bytes()? })
}

pub fn synth_trace(a: SynthTraceArgs, r: &mut Resolver) -> Out {
    let model = resolve_model(&r.require::<String>("model", a.model)?)?;
    let d = SynthSpec::default();
    let spec = SynthSpec {
        road_length: r.get("road_length", a.road_length, d.road_length)?,
        duration: r.get("duration", a.duration, d.duration)?,
        step: r.get("step", a.step, d.step)?,
    };
    let seed = r.seed(a.seed)?;
    let data = synthesize_trace(&model, &spec, seed)?;
    let mut body = Vec::new();
    save_traces(&data, &mut body)?;
    Ok(Report { notes: vec![format!("snapshots: {}; vehicles: {}", data.snapshots.len(), data.total_vehicles())], body })
}
