//! Command-line surface. Every parameter is optional here; defaults live in
//! the command implementations so that config files can fill the gaps.

use crate::config::{Grid, List, PathArg};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "vanet-hopcalc", version, about = "Hop counts of shortest paths in one-dimensional vehicular networks")]
pub struct Cli {
    /// `key = value` file; an output file of this tool also works.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write to this file instead of standard output.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distribution of the number of path nodes N_b.
    Pmf(PmfArgs),
    /// Mean N_b over a grid of λR (Poisson) or R (any model).
    MeanSweep(MeanSweepArgs),
    /// Road simulation statistics over a grid of R.
    Simulate(SimulateArgs),
    /// Fit an exponential mixture to gaps or to a trace.
    Fit(FitArgs),
    /// Trace, fitted model and simulation side by side.
    Compare(CompareArgs),
    /// Hops per component length (in units of R).
    Density(DensityArgs),
    /// CDF of the relay-gap transition kernel.
    KernelDump(KernelDumpArgs),
    /// The 𝔐_{α,k} and u_{α,k} tables for Poisson traffic.
    TablesDump(TablesDumpArgs),
    /// Synthetic mobility trace in the canonical CSV format.
    SynthTrace(SynthTraceArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Pmf(_) => "pmf",
            Command::MeanSweep(_) => "mean-sweep",
            Command::Simulate(_) => "simulate",
            Command::Fit(_) => "fit",
            Command::Compare(_) => "compare",
            Command::Density(_) => "density",
            Command::KernelDump(_) => "kernel-dump",
            Command::TablesDump(_) => "tables-dump",
            Command::SynthTrace(_) => "synth-trace",
        }
    }
}

#[derive(Debug, Args)]
pub struct PmfArgs {
    /// Exact recurrences for Poisson traffic.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub poisson: Option<bool>,
    #[arg(long)]
    pub lambda_prime: Option<f64>,
    /// Preset name, inline spec (`kind=...`) or file.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long = "R", alias = "radius")]
    pub radius: Option<f64>,
    /// auto, recurrence, montecarlo or quadrature.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub tail_tol: Option<f64>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct MeanSweepArgs {
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub poisson: Option<bool>,
    /// λR values, `start:stop:step` or a comma list.
    #[arg(long)]
    pub lambda_grid: Option<Grid>,
    /// Models separated by `|`.
    #[arg(long)]
    pub models: Option<List>,
    #[arg(long)]
    pub r_grid: Option<Grid>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Add road-simulation columns.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub simulate: Option<bool>,
    #[arg(long)]
    pub sim_components: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub r_grid: Option<Grid>,
    #[arg(long)]
    pub components: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Gap file (one distance per line) or trace CSV.
    #[arg(long)]
    pub input: Option<PathArg>,
    /// samples, trace or auto.
    #[arg(long)]
    pub input_format: Option<String>,
    /// Number of mixture components.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub warmup: Option<f64>,
    #[arg(long)]
    pub every: Option<f64>,
    #[arg(long)]
    pub phase: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Trace files separated by `|`; they are merged.
    #[arg(long)]
    pub traces: Option<List>,
    #[arg(long)]
    pub warmup: Option<f64>,
    #[arg(long)]
    pub every: Option<f64>,
    #[arg(long)]
    pub phase: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub r_grid: Option<Grid>,
    #[arg(long)]
    pub chains: Option<u64>,
    #[arg(long)]
    pub sim_components: Option<u64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub models: Option<List>,
    #[arg(long)]
    pub r_grid: Option<Grid>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct KernelDumpArgs {
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long = "R", alias = "radius")]
    pub radius: Option<f64>,
    /// Previous relay gap; omit for the first gap τ_1.
    #[arg(long)]
    pub x_prev: Option<f64>,
    /// auto or numerical.
    #[arg(long)]
    pub mode: Option<String>,
    /// Grid step of the numerical solver.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TablesDumpArgs {
    #[arg(long)]
    pub lambda_prime: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthTraceArgs {
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub road_length: Option<f64>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}
