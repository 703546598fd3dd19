//! Experiment runner: scenario configs in, tidy CSV reports out.
//!
//! A run expands the config into `(seed, snapshot, policy)` cells, solves
//! every cell on a work pool, and writes rows in key order, so the files are
//! identical for any thread count once timing is disabled.

mod compare;
mod config;

pub use compare::{compare, read_results, Comparison, Interval, PairedStat};
pub use config::{DemandSpec, ExperimentConfig, Placement, Policy, ScenarioConfig, SolverConfig, PRESETS};

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{associate_greedy, associate_minmax_load, associate_snr};
use crate::error::{Error, Result};
use crate::loadsolve::{solve_finite, water_filling, write_trace, SaParams, TraceRow};
use crate::metrics::{equal_airtime, served_throughput, throughput, uniform_frames};
use crate::model::{AirtimeAllocation, Association, FrameConfig, RateMatrix, TOL};
use crate::oracle::{exhaustive_finite, exhaustive_saturation};
use crate::phy::rate_matrix;
use crate::satsolve::{solve_saturation, SaturationOptions};
use crate::scenario::{grid_aps, random_waypoint, sample_clients_pmf, sample_clients_uniform, Rect, Topology};

/// One generated network: geometry, rates and per-client demand.
#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    /// Zero for static scenarios; `1..=K` for mobility snapshots.
    pub snapshot: usize,
    pub topology: Topology,
    pub rates: RateMatrix,
    pub frames: Vec<FrameConfig>,
    /// `None` when every client is backlogged.
    pub demand: Option<Vec<f64>>,
}

/// Builds every instance of one seed (one per mobility snapshot).
///
/// Client positions come from the seeded placement stream, demands are drawn
/// after positions from the same stream, and mobility uses per-client
/// streams of the same seed.
pub fn generate(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Instance>> {
    let s = &cfg.scenario;
    let aps = grid_aps(s.width, s.height, s.ap_rows, s.ap_cols)?;
    let area = Rect::area(s.width, s.height)?;
    let placement_area = s.mobility.as_ref().map_or(area, |m| m.bounds);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clients = match s.placement {
        config::Placement::Pmf => sample_clients_pmf(&s.density, &placement_area, s.clients, &mut rng)?,
        config::Placement::Uniform => sample_clients_uniform(&placement_area, s.clients, &mut rng),
    };
    let demand = draw_demand(&cfg.demand, s.clients, &mut rng);
    let base = Topology::new(s.width, s.height, aps, clients, s.walls.clone())?;
    let snapshots: Vec<(usize, Topology)> = match &s.mobility {
        None => vec![(0, base)],
        Some(m) => random_waypoint(&base.clients, m, seed)?
            .into_iter()
            .enumerate()
            .map(|(k, pos)| (k + 1, base.with_clients(pos)))
            .collect(),
    };
    let frames = uniform_frames(cfg.n_aps(), cfg.frames);
    snapshots
        .into_iter()
        .map(|(snapshot, topology)| {
            let rates = rate_matrix(&topology, &cfg.radio)?.rates;
            Ok(Instance { seed, snapshot, topology, rates, frames: frames.clone(), demand: demand.clone() })
        })
        .collect()
}

fn draw_demand(spec: &DemandSpec, n: usize, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    match *spec {
        DemandSpec::Saturated => None,
        DemandSpec::Uniform { min_bps, max_bps } => {
            Some((0..n).map(|_| if min_bps == max_bps { min_bps } else { rng.gen_range(min_bps..=max_bps) }).collect())
        }
    }
}

/// Instance over a fixed topology (e.g. loaded from CSV), using the
/// config's radio, frames and demand model. Demands are drawn from `seed`.
pub fn instance_from_topology(cfg: &ExperimentConfig, topology: Topology, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let demand = draw_demand(&cfg.demand, topology.clients.len(), &mut rng);
    let rates = rate_matrix(&topology, &cfg.radio)?.rates;
    let frames = uniform_frames(topology.aps.len(), cfg.frames);
    Ok(Instance { seed, snapshot: 0, topology, rates, frames, demand })
}

/// Association and airtime chosen by one policy on one instance.
#[derive(Debug, Clone)]
pub struct PolicyOutcome {
    pub policy: Policy,
    pub association: Association,
    pub airtime: AirtimeAllocation,
    pub iterations: usize,
    pub wall_ms: f64,
    pub trace: Option<Vec<TraceRow>>,
}

/// Runs `policy` on `inst`.
pub fn solve_policy(policy: Policy, inst: &Instance, solver: &SolverConfig) -> Result<PolicyOutcome> {
    let start = Instant::now();
    let (rates, frames, m) = (&inst.rates, &inst.frames[..], inst.rates.n_aps());
    let demand = inst.demand.as_deref();
    let allocate = |x: Association, water: bool| -> Result<(Association, AirtimeAllocation)> {
        let t = match (water, demand) {
            (true, Some(d)) => water_filling(&x, rates, frames, d)?,
            _ => equal_airtime(&x, m),
        };
        Ok((x, t))
    };
    let mut iterations = 0;
    let mut trace = None;
    let (association, airtime) = match policy {
        Policy::SnrEa => allocate(associate_snr(rates), false)?,
        Policy::SnrWf => allocate(associate_snr(rates), true)?,
        Policy::GreedyEa => allocate(associate_greedy(&inst.topology, rates), false)?,
        Policy::GreedyWf => allocate(associate_greedy(&inst.topology, rates), true)?,
        Policy::MinmaxEa => allocate(associate_minmax_load(rates, demand), false)?,
        Policy::MinmaxWf => allocate(associate_minmax_load(rates, demand), true)?,
        Policy::ProposedSat => {
            let opts = SaturationOptions { relaxed: solver.relaxed, tie: solver.tie, seed: inst.seed };
            let sol = solve_saturation(rates, frames, &opts)?;
            iterations = sol.report.iterations;
            (sol.association, sol.airtime)
        }
        Policy::ProposedSawf => {
            let d = demand.ok_or_else(|| Error::Invalid("proposed-sawf needs finite demands".into()))?;
            let start = SaturationOptions { relaxed: solver.relaxed, tie: solver.tie, seed: inst.seed };
            let params = SaParams { seed: cell_seed(solver.sa.seed, inst), ..solver.sa };
            let out = solve_finite(rates, frames, d, &start, &params)?;
            iterations = out.perturbations;
            trace = Some(out.trace);
            (out.association, out.airtime)
        }
        Policy::Oracle => {
            let o = match demand {
                None => exhaustive_saturation(rates, frames, solver.oracle_limit)?,
                Some(d) => exhaustive_finite(rates, frames, d, solver.oracle_limit)?,
            };
            iterations = o.candidates as usize;
            (o.association, o.airtime)
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(PolicyOutcome { policy, association, airtime, iterations, wall_ms, trace })
}

// the annealer's stream depends on the configured seed and the cell, never on scheduling
fn cell_seed(base: u64, inst: &Instance) -> u64 {
    base ^ inst.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (inst.snapshot as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

/// One `results.csv` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientRow {
    pub run_id: String,
    pub seed: u64,
    pub snapshot: usize,
    pub policy: String,
    pub client_id: usize,
    pub ap_id: usize,
    pub rate_bps: f64,
    pub airtime_frac: f64,
    pub throughput_bps: f64,
    /// Empty for backlogged clients.
    pub demand_bps: Option<f64>,
    pub satisfied: u8,
}

/// One `summary.csv` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run_id: String,
    pub seed: u64,
    pub snapshot: usize,
    pub policy: String,
    pub utility_nats: f64,
    pub aggregate_bps: f64,
    pub solver_iters: usize,
    pub wall_ms: f64,
}

/// Rows of a single cell.
///
/// With finite demands a client's throughput is capped at its demand, and
/// it counts as satisfied when the cap is reached. Backlogged clients are
/// never marked satisfied.
pub fn cell_rows(run_id: &str, inst: &Instance, out: &PolicyOutcome, timing: bool) -> (Vec<ClientRow>, SummaryRow) {
    let raw = throughput(&out.association, &out.airtime, &inst.rates, &inst.frames);
    let served = match &inst.demand {
        Some(d) => served_throughput(&raw, d),
        None => raw,
    };
    let rows: Vec<ClientRow> = (0..inst.rates.n_clients())
        .map(|i| {
            let j = out.association.ap_of(i);
            let demand = inst.demand.as_ref().map(|d| d[i]);
            ClientRow {
                run_id: run_id.to_string(),
                seed: inst.seed,
                snapshot: inst.snapshot,
                policy: out.policy.label().to_string(),
                client_id: i,
                ap_id: j,
                rate_bps: inst.rates.get(i, j),
                airtime_frac: out.airtime.get(i, j),
                throughput_bps: served[i],
                demand_bps: demand,
                satisfied: demand.is_some_and(|d| served[i] >= d * (1.0 - TOL)) as u8,
            }
        })
        .collect();
    let summary = SummaryRow {
        run_id: run_id.to_string(),
        seed: inst.seed,
        snapshot: inst.snapshot,
        policy: out.policy.label().to_string(),
        utility_nats: crate::metrics::display_utility(&served),
        aggregate_bps: served.iter().sum(),
        solver_iters: out.iterations,
        wall_ms: if timing { out.wall_ms } else { 0.0 },
    };
    (rows, summary)
}

/// Everything a run produced, in deterministic key order.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub results: Vec<ClientRow>,
    pub summary: Vec<SummaryRow>,
    /// `(seed, snapshot, trace)` for every annealing cell.
    pub traces: Vec<(u64, usize, Vec<TraceRow>)>,
}

/// Solves the full grid on `threads` workers (0 picks the rayon default).
pub fn run(cfg: &ExperimentConfig, threads: usize) -> Result<RunOutput> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot build worker pool: {e}")))?;
    pool.install(|| {
        let instances: Vec<Instance> = cfg
            .seeds
            .par_iter()
            .map(|&seed| generate(cfg, seed))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let cells: Vec<(&Instance, Policy)> =
            instances.iter().flat_map(|inst| cfg.policies.iter().map(move |&p| (inst, p))).collect();
        let outcomes: Vec<PolicyOutcome> =
            cells.par_iter().map(|(inst, p)| solve_policy(*p, inst, &cfg.solver)).collect::<Result<_>>()?;

        let mut out = RunOutput::default();
        for ((inst, _), o) in cells.iter().zip(outcomes) {
            let (rows, summary) = cell_rows(&cfg.name, inst, &o, cfg.timing);
            out.results.extend(rows);
            out.summary.push(summary);
            if let Some(trace) = o.trace {
                out.traces.push((inst.seed, inst.snapshot, trace));
            }
        }
        Ok(out)
    })
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub traces: Vec<PathBuf>,
}

/// Writes `results.csv`, `summary.csv` and (optionally) annealing traces
/// under `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path, traces: bool) -> Result<OutputFiles> {
    fs::create_dir_all(dir)?;
    let results = dir.join("results.csv");
    write_csv(&results, &out.results)?;
    let summary = dir.join("summary.csv");
    write_csv(&summary, &out.summary)?;
    let mut trace_paths = Vec::new();
    if traces {
        for (seed, snapshot, trace) in &out.traces {
            let path = dir.join(format!("sa_trace_seed{seed}_snap{snapshot}.csv"));
            write_trace(trace, File::create(&path)?)?;
            trace_paths.push(path);
        }
    }
    Ok(OutputFiles { results, summary, traces: trace_paths })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a config file, mapping I/O failures to config errors.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let source = fs::read_to_string(path)
        .map_err(|e| Error::Config { line: None, message: format!("cannot read {}: {e}", path.display()) })?;
    ExperimentConfig::from_toml(&source)
}

/// Writes a config's TOML form.
pub fn write_config<W: Write>(cfg: &ExperimentConfig, mut w: W) -> Result<()> {
    w.write_all(cfg.to_toml().as_bytes())?;
    Ok(())
}
