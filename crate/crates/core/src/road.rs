//! Direct simulation on a synthetic road.
//!
//! Vehicles are placed by cumulative sums of i.i.d. gaps, the road is cut at
//! every gap longer than `R`, and in each component the path from the first
//! vehicle is built by always jumping to the farthest vehicle within `R`.
//! The first and last components of a road are cut by its ends; they are
//! returned but flagged `censored` and left out of every statistic.

use crate::error::{invalid, Result};
use crate::models::InterdistanceModel;
use crate::rng::substream;
use crate::stats::{Estimate, Moments};
use rayon::prelude::*;

/// Vehicles per simulated block.
pub const BLOCK_VEHICLES: usize = 100_000;
/// Blocks are enlarged so that each holds at least this many components on average.
const MIN_COMPONENTS_PER_BLOCK: f64 = 500.0;
const MAX_BLOCK_VEHICLES: usize = 20_000_000;
/// Cells of the simulated pmf with fewer counts are flagged.
pub const LOW_COUNT: u64 = 5;

#[derive(Debug, Clone)]
pub struct RoadSnapshot {
    positions: Vec<f64>,
    model: InterdistanceModel,
    seed: u64,
}

impl RoadSnapshot {
    /// Sorted vehicle positions in meters, starting at 0.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn model(&self) -> &InterdistanceModel {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

fn positions_from_stream(model: &InterdistanceModel, n_vehicles: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = substream(seed, stream);
    let mut pos = Vec::with_capacity(n_vehicles);
    let mut x = 0.0;
    pos.push(x);
    for _ in 1..n_vehicles {
        x += model.sample(&mut rng);
        pos.push(x);
    }
    pos
}

/// Places `n_vehicles` vehicles with gaps drawn from `model`.
pub fn generate_road(model: &InterdistanceModel, n_vehicles: usize, seed: u64) -> Result<RoadSnapshot> {
    if n_vehicles < 2 {
        return Err(invalid(format!("a road needs at least two vehicles, got {n_vehicles}")));
    }
    Ok(RoadSnapshot { positions: positions_from_stream(model, n_vehicles, seed, 0), model: model.clone(), seed })
}

/// A maximal run of vehicles whose consecutive gaps are all at most `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    /// Index of the first vehicle.
    pub start: usize,
    /// Index of the last vehicle (inclusive).
    pub end: usize,
    /// Distance from the first to the last vehicle.
    pub span: f64,
    /// `L_cc`: the span plus one radius, i.e. the busy period of the
    /// equivalent `GI/D/∞` queue.
    pub length: f64,
    pub n_vehicles: usize,
    /// `N_b`: nodes on the farthest-neighbour path, endpoints included.
    pub path_nodes: usize,
    /// Touches either end of the road.
    pub censored: bool,
}

/// `N_b` for the vehicles `start..=end`: greedy farthest-neighbour chain
/// from `positions[start]`.
pub fn shortest_path_nodes(positions: &[f64], start: usize, end: usize, radius: f64) -> usize {
    let mut nodes = 1;
    let mut i = start;
    let mut j = start;
    while i < end {
        while j < end && positions[j + 1] - positions[i] <= radius {
            j += 1;
        }
        if j == i {
            // Disconnected: not a valid component.
            break;
        }
        i = j;
        nodes += 1;
    }
    nodes
}

/// Splits sorted `positions` into components. Singletons are components too.
pub fn split_components(positions: &[f64], radius: f64) -> Result<Vec<Component>> {
    if !(radius > 0.0) {
        return Err(invalid(format!("radius must be positive, got {radius}")));
    }
    let n = positions.len();
    let mut out = Vec::new();
    let mut start = 0;
    for i in 0..n {
        if i + 1 == n || positions[i + 1] - positions[i] > radius {
            let span = positions[i] - positions[start];
            out.push(Component {
                start,
                end: i,
                span,
                length: span + radius,
                n_vehicles: i - start + 1,
                path_nodes: shortest_path_nodes(positions, start, i, radius),
                censored: start == 0 || i + 1 == n,
            });
            start = i + 1;
        }
    }
    Ok(out)
}

/// Consecutive relay gaps `(τ_{n-1}, τ_n)` along the farthest-neighbour chain
/// of one component. The last transition leaves the component, so its `τ_n`
/// is the gap to the next vehicle (longer than `R`); it is omitted when the
/// component ends the road.
pub fn relay_transitions(positions: &[f64], c: &Component, radius: f64) -> Vec<(f64, f64)> {
    let gaps = relay_gaps(positions, c, radius);
    gaps.windows(2).map(|w| (w[0], w[1])).collect()
}

/// The relay gaps `τ_1, τ_2, …` of a component, ending with the exit gap
/// when there is a vehicle after the component.
pub fn relay_gaps(positions: &[f64], c: &Component, radius: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(c.path_nodes);
    let mut i = c.start;
    let mut j = c.start;
    while i < c.end {
        while j < c.end && positions[j + 1] - positions[i] <= radius {
            j += 1;
        }
        out.push(positions[j] - positions[i]);
        i = j;
    }
    if c.end + 1 < positions.len() {
        out.push(positions[c.end + 1] - positions[c.end]);
    }
    out
}

/// `n` independent draws of `τ_n` given `τ_{n-1} = x_prev`, simulated on the
/// road: the gap after the current relay is conditioned to exceed
/// `R - x_prev` and the next relay is the farthest vehicle within `R`. Draws
/// beyond `R` are the lone exit gap.
pub fn conditional_relay_gaps(
    model: &InterdistanceModel,
    radius: f64,
    x_prev: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(x_prev > 0.0 && x_prev <= radius) {
        return Err(invalid(format!("x_prev must lie in (0, R], got {x_prev}")));
    }
    let a = radius - x_prev;
    const CHUNK: usize = 4096;
    let chunks: Vec<Result<Vec<f64>>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let m = CHUNK.min(n - c * CHUNK);
            let mut out = Vec::with_capacity(m);
            for _ in 0..m {
                let first = model.sample_above(a, &mut rng)?;
                if first > radius {
                    out.push(first);
                    continue;
                }
                let mut x = first;
                loop {
                    let next = x + model.sample(&mut rng);
                    if next > radius {
                        break;
                    }
                    x = next;
                }
                out.push(x);
            }
            Ok(out)
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Aggregated results of [`simulate_stats`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub n_components: u64,
    /// `E[N_b]`.
    pub mean_hops: Estimate,
    /// `E[L_cc]` (span plus `R`).
    pub mean_length: Estimate,
    /// Mean distance from the first to the last vehicle.
    pub mean_span: Estimate,
    pub mean_vehicles: Estimate,
    /// `counts[k-1]` components had `N_b = k`.
    pub counts: Vec<u64>,
}

impl SimStats {
    pub fn pmf(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n_components as f64).collect()
    }

    pub fn pmf_stderr(&self) -> Vec<f64> {
        let n = self.n_components as f64;
        self.pmf().iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect()
    }

    /// `k` values whose cell holds fewer than [`LOW_COUNT`] components.
    pub fn low_count_cells(&self) -> Vec<usize> {
        self.counts.iter().enumerate().filter(|(_, &c)| c < LOW_COUNT).map(|(i, _)| i + 1).collect()
    }
}

/// Per-component record kept while a block is scanned.
#[derive(Clone, Copy)]
struct Record {
    nodes: u32,
    vehicles: u32,
    span: f64,
}

fn block_records(model: &InterdistanceModel, radius: f64, vehicles: usize, seed: u64, block: u64) -> Vec<Record> {
    let pos = positions_from_stream(model, vehicles, seed, block);
    split_components(&pos, radius)
        .expect("radius checked")
        .into_iter()
        .filter(|c| !c.censored)
        .map(|c| Record { nodes: c.path_nodes as u32, vehicles: c.n_vehicles as u32, span: c.span })
        .collect()
}

/// Simulates roads block by block until `n_components` complete components
/// are collected, then summarises exactly the first `n_components` of them.
/// Block `b` always uses stream `b` of `seed`, so results do not depend on the
/// number of threads.
pub fn simulate_stats(model: &InterdistanceModel, radius: f64, n_components: u64, seed: u64) -> Result<SimStats> {
    if n_components < 1000 {
        return Err(invalid(format!("need at least 10^3 components, got {n_components}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {radius}")));
    }
    let exit = model.survival(radius);
    let per_component = 1.0 / exit;
    if !(per_component * MIN_COMPONENTS_PER_BLOCK / 10.0 <= MAX_BLOCK_VEHICLES as f64) {
        return Err(invalid(format!("components at R = {radius} are too long to simulate (P(gap > R) = {exit:e})")));
    }
    let vehicles = ((per_component * MIN_COMPONENTS_PER_BLOCK).ceil() as usize)
        .clamp(BLOCK_VEHICLES, MAX_BLOCK_VEHICLES);
    let expected = (vehicles as f64 / per_component - 2.0).max(1.0);

    let mut records: Vec<Record> = Vec::with_capacity(n_components as usize);
    let mut next_block = 0u64;
    while (records.len() as u64) < n_components {
        let missing = (n_components - records.len() as u64) as f64;
        let wave = ((missing / expected).ceil() as u64 + 1).max(1);
        let batch: Vec<Vec<Record>> = (next_block..next_block + wave)
            .into_par_iter()
            .map(|b| block_records(model, radius, vehicles, seed, b))
            .collect();
        next_block += wave;
        for b in batch {
            records.extend(b);
        }
    }
    records.truncate(n_components as usize);

    let (mut hops, mut len, mut span, mut veh) =
        (Moments::default(), Moments::default(), Moments::default(), Moments::default());
    let mut counts = Vec::new();
    for r in &records {
        hops.push(r.nodes as f64);
        span.push(r.span);
        len.push(r.span + radius);
        veh.push(r.vehicles as f64);
        let k = r.nodes as usize;
        if counts.len() < k {
            counts.resize(k, 0);
        }
        counts[k - 1] += 1;
    }
    Ok(SimStats {
        n_components,
        mean_hops: hops.estimate(),
        mean_length: len.estimate(),
        mean_span: span.estimate(),
        mean_vehicles: veh.estimate(),
        counts,
    })
}

/// Components and their statistics for a fixed set of positions (e.g. a
/// trace snapshot): only uncensored components are kept.
pub fn complete_components(positions: &[f64], radius: f64) -> Result<Vec<Component>> {
    Ok(split_components(positions, radius)?.into_iter().filter(|c| !c.censored).collect())
}
