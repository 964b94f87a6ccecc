//! Mobility traces: ingestion, periodic sampling, gap extraction and the
//! trace / model / simulation comparison.
//!
//! The canonical file format is a CSV with header `time_s,vehicle_id,position_m`;
//! rows sharing a time form one snapshot of a one-dimensional road. Lines
//! starting with `#` are ignored. Other schemas plug in through [`RowMapper`].

use crate::error::{invalid, Error, Result};
use crate::hops::{hop_pmf_montecarlo, DEFAULT_K_MAX};
use crate::kernel::RelayKernel;
use crate::models::{fit_hyperexponential, EmConfig, HyperexpFit, InterdistanceModel};
use crate::rng::{mix, substream};
use crate::road::{complete_components, simulate_stats};
use crate::stats::{Estimate, Moments};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

pub const CANONICAL_HEADER: [&str; 3] = ["time_s", "vehicle_id", "position_m"];

/// One observation: a vehicle's position at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub vehicle_id: String,
    pub position: f64,
}

/// Turns CSV records of some schema into [`TraceRow`]s.
pub trait RowMapper {
    /// Inspects the header; an `Err` makes the whole file unreadable.
    fn bind(&mut self, headers: &csv::StringRecord) -> std::result::Result<(), String>;
    /// `None` marks the row as malformed.
    fn map(&self, record: &csv::StringRecord) -> Option<TraceRow>;
}

/// Picks three named columns; positions may be rescaled to meters.
#[derive(Debug, Clone)]
pub struct ColumnMapper {
    pub time: String,
    pub vehicle_id: String,
    pub position: String,
    pub position_scale: f64,
    idx: Option<[usize; 3]>,
}

impl ColumnMapper {
    pub fn new(time: &str, vehicle_id: &str, position: &str) -> Self {
        Self {
            time: time.into(),
            vehicle_id: vehicle_id.into(),
            position: position.into(),
            position_scale: 1.0,
            idx: None,
        }
    }

    pub fn canonical() -> Self {
        Self::new(CANONICAL_HEADER[0], CANONICAL_HEADER[1], CANONICAL_HEADER[2])
    }
}

impl RowMapper for ColumnMapper {
    fn bind(&mut self, headers: &csv::StringRecord) -> std::result::Result<(), String> {
        let find = |name: &str| {
            headers.iter().position(|h| h.trim() == name).ok_or_else(|| format!("missing column `{name}`"))
        };
        self.idx = Some([find(&self.time)?, find(&self.vehicle_id)?, find(&self.position)?]);
        Ok(())
    }

    fn map(&self, record: &csv::StringRecord) -> Option<TraceRow> {
        let [t, v, p] = self.idx?;
        let time: f64 = record.get(t)?.trim().parse().ok()?;
        let position: f64 = record.get(p)?.trim().parse().ok()?;
        let vehicle_id = record.get(v)?.trim().to_string();
        (time.is_finite() && position.is_finite()).then(|| TraceRow { time, vehicle_id, position: position * self.position_scale })
    }
}

/// Vehicle positions at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    /// Index into [`TraceMetadata::sources`].
    pub source: usize,
    /// Sorted positions in meters.
    pub positions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceMetadata {
    /// Road segment length in meters, when known.
    pub road_length: Option<f64>,
    pub sources: Vec<String>,
}

/// Snapshots ordered by source, then time.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceDataset {
    pub snapshots: Vec<Snapshot>,
    pub metadata: TraceMetadata,
}

/// A dataset together with the number of rows that could not be parsed.
#[derive(Debug, Clone)]
pub struct LoadedTrace {
    pub dataset: TraceDataset,
    pub malformed_rows: usize,
}

impl TraceDataset {
    /// Groups rows into snapshots; input order does not matter.
    pub fn from_rows(rows: Vec<TraceRow>, source: &str) -> Result<Self> {
        let mut by_time: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
        for r in rows {
            // Order-preserving key for finite floats.
            let bits = r.time.to_bits();
            let key = if r.time.is_sign_negative() { !bits } else { bits | (1 << 63) };
            by_time.entry(key).or_insert_with(|| (r.time, Vec::new())).1.push(r.position);
        }
        if by_time.is_empty() {
            return Err(Error::Empty(format!("trace `{source}` has no rows")));
        }
        let snapshots = by_time
            .into_values()
            .map(|(time, mut positions)| {
                positions.sort_by(|a, b| a.total_cmp(b));
                Snapshot { time, source: 0, positions }
            })
            .collect();
        Ok(Self { snapshots, metadata: TraceMetadata { road_length: None, sources: vec![source.to_string()] } })
    }

    /// Concatenates datasets, keeping each snapshot's source label.
    pub fn merge(parts: Vec<TraceDataset>) -> Result<Self> {
        let mut out = TraceDataset { snapshots: Vec::new(), metadata: TraceMetadata::default() };
        for p in parts {
            let offset = out.metadata.sources.len();
            out.metadata.sources.extend(p.metadata.sources);
            out.metadata.road_length = match (out.metadata.road_length, p.metadata.road_length) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            };
            out.snapshots
                .extend(p.snapshots.into_iter().map(|s| Snapshot { source: s.source + offset, ..s }));
        }
        if out.snapshots.is_empty() {
            return Err(Error::Empty("nothing to merge".into()));
        }
        Ok(out)
    }

    pub fn total_vehicles(&self) -> usize {
        self.snapshots.iter().map(|s| s.positions.len()).sum()
    }
}

/// Reads a trace with the given row mapper.
pub fn read_traces<R: Read>(reader: R, mapper: &mut dyn RowMapper, source: &str) -> Result<LoadedTrace> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?.clone();
    mapper.bind(&headers).map_err(|message| Error::Parse { line: 1, message })?;
    let mut rows = Vec::new();
    let mut malformed = 0;
    for rec in rdr.records() {
        match rec {
            Ok(r) => match mapper.map(&r) {
                Some(row) => rows.push(row),
                None => malformed += 1,
            },
            Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => return Err(e.into()),
            Err(_) => malformed += 1,
        }
    }
    Ok(LoadedTrace { dataset: TraceDataset::from_rows(rows, source)?, malformed_rows: malformed })
}

/// Loads a canonical trace file, or another schema through `mapper`.
pub fn load_traces(path: &Path, mapper: Option<&mut dyn RowMapper>) -> Result<LoadedTrace> {
    let file = std::fs::File::open(path)?;
    let source = path.display().to_string();
    match mapper {
        Some(m) => read_traces(file, m, &source),
        None => read_traces(file, &mut ColumnMapper::canonical(), &source),
    }
}

/// Writes the canonical CSV. Vehicle ids are `source:index` within each
/// snapshot; positions use the shortest exact decimal form, so reading the
/// file back reproduces the dataset bit for bit.
pub fn save_traces<W: Write>(dataset: &TraceDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CANONICAL_HEADER)?;
    for s in &dataset.snapshots {
        let t = s.time.to_string();
        for (i, p) in s.positions.iter().enumerate() {
            w.write_record([t.as_str(), &format!("{}:{i}", s.source), &p.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Keeps snapshots at or after `warmup`, then the earliest snapshot of each
/// window `[warmup + phase + j·every, warmup + phase + (j+1)·every)`, per source.
pub fn preprocess(dataset: &TraceDataset, warmup: f64, every: f64, phase: f64) -> Result<TraceDataset> {
    if !(warmup >= 0.0) || !(every > 0.0) || !(phase >= 0.0) {
        return Err(invalid("need warmup ≥ 0, every > 0 and phase ≥ 0"));
    }
    let origin = warmup + phase;
    let mut kept: BTreeMap<(usize, i64), &Snapshot> = BTreeMap::new();
    for s in &dataset.snapshots {
        if s.time < origin {
            continue;
        }
        let w = ((s.time - origin) / every).floor() as i64;
        kept.entry((s.source, w))
            .and_modify(|cur| {
                if s.time < cur.time {
                    *cur = s;
                }
            })
            .or_insert(s);
    }
    if kept.is_empty() {
        return Err(Error::Empty(format!("no snapshot at or after t = {origin}")));
    }
    Ok(TraceDataset { snapshots: kept.into_values().cloned().collect(), metadata: dataset.metadata.clone() })
}

/// Gaps between consecutive vehicles, pooled over all snapshots.
pub fn interdistances(dataset: &TraceDataset) -> Vec<f64> {
    dataset
        .snapshots
        .iter()
        .flat_map(|s| s.positions.windows(2).map(|w| w[1] - w[0]))
        .collect()
}

/// Layout of a synthetic trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    /// Each snapshot covers `[0, road_length]`.
    pub road_length: f64,
    pub duration: f64,
    pub step: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self { road_length: 10_000.0, duration: 7200.0, step: 60.0 }
    }
}

/// Independent snapshots at `t = 0, step, …, duration`, each a road of gaps
/// drawn from `model` starting at 0 and stopping at `road_length`.
pub fn synthesize_trace(model: &InterdistanceModel, spec: &SynthSpec, seed: u64) -> Result<TraceDataset> {
    if !(spec.road_length > 0.0 && spec.step > 0.0 && spec.duration >= 0.0) {
        return Err(invalid("synthetic trace needs positive road length and step"));
    }
    let n = (spec.duration / spec.step + 1e-9).floor() as u64 + 1;
    let snapshots = (0..n)
        .map(|i| {
            let mut rng = substream(seed, i);
            let mut positions = vec![0.0];
            let mut x = model.sample(&mut rng);
            while x <= spec.road_length {
                positions.push(x);
                x += model.sample(&mut rng);
            }
            Snapshot { time: i as f64 * spec.step, source: 0, positions }
        })
        .collect();
    Ok(TraceDataset {
        snapshots,
        metadata: TraceMetadata { road_length: Some(spec.road_length), sources: vec!["synthetic".into()] },
    })
}

/// Settings of [`compare_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    /// Mixture components of the fitted model.
    pub components: usize,
    pub em: EmConfig,
    /// Monte-Carlo chains for the model column.
    pub chains: u64,
    pub k_max: usize,
    /// Components simulated for the simulation column.
    pub sim_components: u64,
    pub seed: u64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self { components: 2, em: EmConfig::default(), chains: 200_000, k_max: DEFAULT_K_MAX, sim_components: 100_000, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub radius: f64,
    /// Mean `N_b` over complete components of the trace snapshots, `None`
    /// when no snapshot holds a complete component.
    pub mean_nb_trace: Option<Estimate>,
    pub trace_components: u64,
    pub mean_nb_model: Estimate,
    pub mean_nb_sim: Estimate,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub fit: HyperexpFit,
    pub rows: Vec<CompareRow>,
}

/// Mean `N_b` over the complete components of every snapshot.
pub fn trace_mean_hops(dataset: &TraceDataset, radius: f64) -> Result<(Option<Estimate>, u64)> {
    let mut m = Moments::default();
    for s in &dataset.snapshots {
        for c in complete_components(&s.positions, radius)? {
            m.push(c.path_nodes as f64);
        }
    }
    Ok(((m.n > 0).then(|| m.estimate()), m.n))
}

/// Fits a mixture to the dataset's gaps and compares mean `N_b` from the
/// trace itself, from the fitted kernel's chains and from road simulation.
pub fn compare_report(dataset: &TraceDataset, radii: &[f64], config: &CompareConfig) -> Result<CompareReport> {
    if radii.is_empty() {
        return Err(invalid("empty R grid"));
    }
    let fit = fit_hyperexponential(&interdistances(dataset), config.components, &config.em)?;
    let model = &fit.model;
    let mut rows = Vec::with_capacity(radii.len());
    for (i, &r) in radii.iter().enumerate() {
        let (trace, n) = trace_mean_hops(dataset, r)?;
        let kernel = RelayKernel::auto(model.clone(), r)?;
        let mc = hop_pmf_montecarlo(&kernel, config.chains, config.k_max, mix(config.seed, 2 * i as u64))?
            .mean_hops()?;
        let sim = simulate_stats(model, r, config.sim_components, mix(config.seed, 2 * i as u64 + 1))?;
        rows.push(CompareRow {
            radius: r,
            mean_nb_trace: trace,
            trace_components: n,
            mean_nb_model: Estimate { value: mc.mean, stderr: mc.stderr.unwrap_or(0.0) },
            mean_nb_sim: sim.mean_hops,
        });
    }
    Ok(CompareReport { fit, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::presets;
    use crate::stats::ks_statistic;

    fn canon(text: &str) -> LoadedTrace {
        read_traces(text.as_bytes(), &mut ColumnMapper::canonical(), "test").unwrap()
    }

    #[test]
    fn one_snapshot_sorted() {
        let t = canon("time_s,vehicle_id,position_m\n5,a,30\n5,b,10\n5,c,20\n");
        assert_eq!(t.dataset.snapshots.len(), 1);
        assert_eq!(t.dataset.snapshots[0].positions, vec![10.0, 20.0, 30.0]);
        assert_eq!(t.malformed_rows, 0);
    }

    #[test]
    fn row_order_does_not_matter() {
        let a = canon("time_s,vehicle_id,position_m\n0,a,1\n0,b,5\n60,a,2\n60,b,7\n");
        let b = canon("time_s,vehicle_id,position_m\n60,b,7\n0,b,5\n60,a,2\n0,a,1\n");
        assert_eq!(a.dataset, b.dataset);
    }

    #[test]
    fn malformed_rows_and_bad_headers() {
        let t = canon("# comment\ntime_s,vehicle_id,position_m\n0,a,1\n0,b,oops\n0,c\n1,a,2\n");
        assert_eq!(t.malformed_rows, 2);
        assert_eq!(t.dataset.snapshots.len(), 2);
        let e = read_traces("t,id,x\n0,a,1\n".as_bytes(), &mut ColumnMapper::canonical(), "x").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = read_traces("time_s,vehicle_id,position_m\n".as_bytes(), &mut ColumnMapper::canonical(), "x");
        assert!(matches!(e, Err(Error::Empty(_))));
    }

    #[test]
    fn custom_mapper() {
        let mut m = ColumnMapper::new("t", "car", "x_km");
        m.position_scale = 1000.0;
        let t = read_traces("car,x_km,t\na,1.5,0\nb,0.5,0\n".as_bytes(), &mut m, "km").unwrap();
        assert_eq!(t.dataset.snapshots[0].positions, vec![500.0, 1500.0]);
    }

    #[test]
    fn save_load_round_trip() {
        let d = synthesize_trace(&presets::f8h(), &SynthSpec { road_length: 5000.0, duration: 600.0, step: 60.0 }, 4)
            .unwrap();
        let mut buf = Vec::new();
        save_traces(&d, &mut buf).unwrap();
        let back = canon(std::str::from_utf8(&buf).unwrap());
        assert_eq!(back.dataset.snapshots, d.snapshots);
    }

    #[test]
    fn preprocess_windows() {
        let rows = (0..=60)
            .flat_map(|i| (0..3).map(move |v| TraceRow { time: 60.0 * i as f64, vehicle_id: v.to_string(), position: v as f64 }))
            .collect();
        let d = TraceDataset::from_rows(rows, "grid").unwrap();
        let p = preprocess(&d, 600.0, 600.0, 0.0).unwrap();
        let times: Vec<f64> = p.snapshots.iter().map(|s| s.time).collect();
        assert_eq!(times, vec![600.0, 1200.0, 1800.0, 2400.0, 3000.0, 3600.0]);
        assert_eq!(preprocess(&p, 600.0, 600.0, 0.0).unwrap(), p);
        assert_eq!(preprocess(&d, 0.0, 1e-6, 0.0).unwrap(), d);
        assert!(matches!(preprocess(&d, 1e5, 600.0, 0.0), Err(Error::Empty(_))));
        let shifted = preprocess(&d, 600.0, 600.0, 300.0).unwrap();
        assert_eq!(shifted.snapshots[0].time, 900.0);
    }

    #[test]
    fn gaps_and_counting() {
        let d = TraceDataset::from_rows(
            vec![
                TraceRow { time: 0.0, vehicle_id: "a".into(), position: 0.0 },
                TraceRow { time: 0.0, vehicle_id: "b".into(), position: 10.0 },
                TraceRow { time: 0.0, vehicle_id: "c".into(), position: 25.0 },
                TraceRow { time: 1.0, vehicle_id: "a".into(), position: 3.0 },
            ],
            "x",
        )
        .unwrap();
        assert_eq!(interdistances(&d), vec![10.0, 15.0]);

        let syn = synthesize_trace(&presets::f8h(), &SynthSpec::default(), 1).unwrap();
        let p = preprocess(&syn, 600.0, 600.0, 0.0).unwrap();
        let expect: usize = p.snapshots.iter().map(|s| s.positions.len() - 1).sum();
        assert_eq!(interdistances(&p).len(), expect);
    }

    #[test]
    fn translation_invariance() {
        let d = synthesize_trace(&presets::f8h(), &SynthSpec { road_length: 2000.0, duration: 120.0, step: 60.0 }, 2)
            .unwrap();
        let mut moved = d.clone();
        for (i, s) in moved.snapshots.iter_mut().enumerate() {
            s.positions.iter_mut().for_each(|p| *p += 1024.0 * (i + 1) as f64);
        }
        let (a, b) = (interdistances(&d), interdistances(&moved));
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
    }

    #[test]
    fn synthetic_f11h_gaps() {
        let m = presets::f11h();
        let spec = SynthSpec { road_length: 200_000.0, duration: 600.0, step: 60.0 };
        let mut g = interdistances(&synthesize_trace(&m, &spec, 3).unwrap());
        assert!(g.len() > 100_000);
        assert!(ks_statistic(&mut g, |x| m.cdf(x)) <= 0.01);
    }

    #[test]
    fn merge_keeps_sources() {
        let a = synthesize_trace(&presets::f8h(), &SynthSpec { road_length: 500.0, duration: 60.0, step: 60.0 }, 1).unwrap();
        let b = synthesize_trace(&presets::f11h(), &SynthSpec { road_length: 500.0, duration: 60.0, step: 60.0 }, 2).unwrap();
        let m = TraceDataset::merge(vec![a.clone(), b]).unwrap();
        assert_eq!(m.metadata.sources.len(), 2);
        assert_eq!(m.snapshots.len(), 4);
        assert_eq!(m.snapshots[2].source, 1);
        // Same times in both sources survive preprocessing separately.
        assert_eq!(preprocess(&m, 0.0, 600.0, 0.0).unwrap().snapshots.len(), 2);
    }

    #[test]
    fn tiny_radius_gives_single_nodes() {
        let d = synthesize_trace(&presets::f8h(), &SynthSpec { road_length: 20_000.0, duration: 600.0, step: 60.0 }, 8)
            .unwrap();
        let min_gap = interdistances(&d).into_iter().fold(f64::INFINITY, f64::min);
        let r = min_gap * 0.5;
        let (e, n) = trace_mean_hops(&d, r).unwrap();
        assert!(n > 0);
        assert_eq!(e.unwrap().value, 1.0);
    }
}
