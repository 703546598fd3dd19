use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{all_demands_met, finite_utility, perturbate, water_filling};
use crate::error::{Error, Result};
use crate::metrics::throughput;
use crate::model::{AirtimeAllocation, Association, FrameConfig, RateMatrix, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaParams {
    /// Initial temperature.
    pub t0: f64,
    /// Cooling factor; the `v`-th update multiplies the temperature by `alpha^v`.
    pub alpha: f64,
    /// Candidate moves per temperature; `ceil(N M / 2)` when unset.
    pub q: Option<usize>,
    pub t_min: f64,
    /// Probability of a uniformly random move.
    pub p: f64,
    pub seed: u64,
    /// Independent runs from the same start; the best utility wins.
    pub restarts: usize,
}

impl Default for SaParams {
    fn default() -> Self {
        Self { t0: 20.0, alpha: 0.7, q: None, t_min: 0.001, p: 0.1, seed: 0, restarts: 1 }
    }
}

impl SaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Invalid(format!("p must lie in [0, 1], got {}", self.p)));
        }
        if !(self.t_min > 0.0 && self.t_min < self.t0) {
            return Err(Error::Invalid("temperatures must satisfy 0 < t_min < t0".into()));
        }
        if self.q == Some(0) {
            return Err(Error::Invalid("q must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Invalid("restarts must be positive".into()));
        }
        Ok(())
    }

    pub fn moves_per_temperature(&self, n: usize, m: usize) -> usize {
        self.q.unwrap_or((n * m).div_ceil(2)).max(1)
    }
}

/// One candidate evaluation of the annealer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub temperature: f64,
    /// Utility of the candidate.
    pub utility: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct SaOutcome {
    pub association: Association,
    pub airtime: AirtimeAllocation,
    pub report: SolveReport,
    /// Temperature levels whose inner loop ran (fully or until early exit).
    pub levels: usize,
    pub perturbations: usize,
    /// True when the run stopped because every demand was met.
    pub demands_met: bool,
    pub trace: Vec<TraceRow>,
}

/// Simulated annealing over associations with water-filled airtimes.
///
/// Temperature follows `T <- T alpha^v` for `v = 1, 2, ...` while `T > t_min`;
/// each level evaluates `q` neighbours. Improvements are always taken and
/// worse candidates with probability `exp(dE / T)`. The run stops early as
/// soon as the current solution meets every demand; otherwise the best
/// solution seen is returned.
///
/// With `restarts > 1` the runs use seeds `seed, seed + 1, ...` in parallel and
/// the highest utility is kept, the lowest seed winning ties.
pub fn simulated_annealing(
    x0: &Association,
    rates: &RateMatrix,
    frames: &[FrameConfig],
    demand: &[f64],
    params: &SaParams,
) -> Result<SaOutcome> {
    params.validate()?;
    if params.restarts == 1 {
        return anneal(x0, rates, frames, demand, params);
    }
    let runs: Vec<SaOutcome> = (0..params.restarts as u64)
        .into_par_iter()
        .map(|k| anneal(x0, rates, frames, demand, &SaParams { seed: params.seed.wrapping_add(k), ..*params }))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.report.utility > runs[best].report.utility {
            best = k;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one restart"))
}

fn anneal(
    x0: &Association,
    rates: &RateMatrix,
    frames: &[FrameConfig],
    demand: &[f64],
    params: &SaParams,
) -> Result<SaOutcome> {
    let start = Instant::now();
    let (n, m) = (rates.n_clients(), rates.n_aps());
    let q = params.moves_per_temperature(n, m);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut x = x0.clone();
    let mut t = water_filling(&x, rates, frames, demand)?;
    let mut u = finite_utility(&x, &t, rates, frames)?;
    let (mut best_x, mut best_t, mut best_u) = (x.clone(), t.clone(), u);

    let mut temperature = params.t0;
    let mut v = 1;
    let mut levels = 0;
    let mut perturbations = 0;
    let mut demands_met = false;
    let mut trace = Vec::new();

    'outer: while temperature > params.t_min {
        levels += 1;
        for _ in 0..q {
            if all_demands_met(&x, &t, rates, frames, demand) {
                demands_met = true;
                best_x = x.clone();
                best_t = t.clone();
                best_u = u;
                break 'outer;
            }
            let candidate = perturbate(&x, &t, rates, frames, demand, params.p, &mut rng).association;
            perturbations += 1;
            let t_new = water_filling(&candidate, rates, frames, demand)?;
            let u_new = finite_utility(&candidate, &t_new, rates, frames)?;
            let delta = u_new - u;
            let accepted = delta > 0.0 || rng.gen::<f64>() < (delta / temperature).exp();
            trace.push(TraceRow { iteration: perturbations, temperature, utility: u_new, accepted });
            if accepted {
                x = candidate;
                t = t_new;
                u = u_new;
                if u > best_u {
                    best_x = x.clone();
                    best_t = t.clone();
                    best_u = u;
                }
            }
        }
        temperature *= params.alpha.powi(v);
        v += 1;
    }
    if !demands_met && all_demands_met(&best_x, &best_t, rates, frames, demand) {
        demands_met = true;
    }

    let s = throughput(&best_x, &best_t, rates, frames);
    let mut report = SolveReport::new("proposed-sawf", params.seed, s, best_u);
    report.iterations = perturbations;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(SaOutcome { association: best_x, airtime: best_t, report, levels, perturbations, demands_met, trace })
}

/// Writes an annealing trace as CSV `iteration,temperature,utility,accepted`.
pub fn write_trace<W: std::io::Write>(trace: &[TraceRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in trace {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::uniform_frames;

    #[test]
    fn default_schedule_runs_seven_levels() {
        // tiny instance that can never meet its demands, so no early exit
        let r = RateMatrix::from_rows(&[vec![1e9, 1e9], vec![1e9, 1e9], vec![1e9, 1e9]]).unwrap();
        let f = uniform_frames(2, FrameConfig::default());
        let x0 = Association::new(vec![0, 0, 1], &r).unwrap();
        let out = simulated_annealing(&x0, &r, &f, &[5e9; 3], &SaParams::default()).unwrap();
        assert_eq!(out.levels, 7);
        assert_eq!(out.perturbations, 7 * 3);
        assert!(!out.demands_met);
    }

    #[test]
    fn satisfied_start_returns_unchanged() {
        let r = RateMatrix::from_rows(&[vec![1e9, 1e9], vec![1e9, 1e9]]).unwrap();
        let f = uniform_frames(2, FrameConfig::default());
        let x0 = Association::new(vec![0, 1], &r).unwrap();
        let out = simulated_annealing(&x0, &r, &f, &[0.5e9, 0.5e9], &SaParams::default()).unwrap();
        assert_eq!(out.association, x0);
        assert_eq!(out.perturbations, 0);
        assert!(out.demands_met);
    }

    #[test]
    fn rejects_bad_params() {
        let bad = SaParams { alpha: 1.0, ..SaParams::default() };
        assert!(bad.validate().is_err());
        let bad = SaParams { t_min: 30.0, ..SaParams::default() };
        assert!(bad.validate().is_err());
        assert_eq!(SaParams::default().moves_per_temperature(10, 4), 20);
        assert_eq!(SaParams::default().moves_per_temperature(3, 3), 5);
    }
}
