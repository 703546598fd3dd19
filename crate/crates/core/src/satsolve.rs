//! Backlogged-traffic association.
//!
//! The integer problem (one AP per client, equal airtime on every AP) is
//! relaxed to fractional associations with row sums at most one. The relaxed
//! log-utility
//!
//! ```text
//! U(x) = sum_ij x_ij ln(h_j r_ij / L_j),   L_j = sum_k x_kj
//! ```
//!
//! is concave, and is maximised here by projected gradient ascent over the
//! product of per-client simplices. The fractional optimum is then turned
//! into an association by iterative rounding, which fixes the largest
//! remaining fraction first and hands the mass it frees to the clients that
//! are still undecided.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::{equal_airtime, throughput, utility};
use crate::model::{AirtimeAllocation, Association, FractionalAssociation, FrameConfig, Matrix, RateMatrix, SolveReport};

/// Floor on a column load when taking its logarithm in the gradient.
const MIN_LOAD: f64 = 1e-12;
const ARMIJO: f64 = 1e-4;
const MAX_STEP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxedSolverParams {
    /// Initial step size of the ascent.
    pub step: f64,
    pub max_iters: usize,
    /// Stop once a step improves the utility by less than this.
    pub tol: f64,
    /// Moves smaller than this (max-norm) count as stationary.
    pub projection_tol: f64,
}

impl Default for RelaxedSolverParams {
    fn default() -> Self {
        Self { step: 0.05, max_iters: 5000, tol: 1e-8, projection_tol: 1e-12 }
    }
}

impl RelaxedSolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.max_iters > 0 && self.tol > 0.0 && self.projection_tol > 0.0) {
            return Err(Error::Invalid("relaxed solver parameters must all be positive".into()));
        }
        Ok(())
    }
}

/// How exact ties among the largest fractions are broken during rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Uniformly among the tied pairs, from the seeded generator.
    #[default]
    Random,
    /// Lowest client index, then lowest AP index.
    Lowest,
}

/// Precomputed `ln(h_j r_ij)` for feasible links.
struct LogRates {
    n: usize,
    m: usize,
    log_hr: Vec<f64>,
    feasible: Vec<bool>,
}

impl LogRates {
    fn new(rates: &RateMatrix, frames: &[FrameConfig]) -> Result<Self> {
        let (n, m) = (rates.n_clients(), rates.n_aps());
        if frames.len() != m {
            return Err(Error::Shape(format!("{} frame configs for {m} APs", frames.len())));
        }
        let mut log_hr = vec![0.0; n * m];
        let mut feasible = vec![false; n * m];
        for i in 0..n {
            for j in 0..m {
                let r = rates.get(i, j);
                if r > 0.0 {
                    log_hr[i * m + j] = (frames[j].efficiency() * r).ln();
                    feasible[i * m + j] = true;
                }
            }
        }
        Ok(Self { n, m, log_hr, feasible })
    }

    fn column_loads(&self, x: &Matrix) -> Vec<f64> {
        (0..self.m).map(|j| x.col_sum(j)).collect()
    }

    fn utility(&self, x: &Matrix) -> f64 {
        let loads = self.column_loads(x);
        let mut u = 0.0;
        for i in 0..self.n {
            for j in 0..self.m {
                let v = x.get(i, j);
                if v > 0.0 && self.feasible[i * self.m + j] {
                    u += v * (self.log_hr[i * self.m + j] - loads[j].ln());
                }
            }
        }
        u
    }

    fn gradient(&self, x: &Matrix) -> Matrix {
        let log_loads: Vec<f64> = self.column_loads(x).iter().map(|l| l.max(MIN_LOAD).ln()).collect();
        let mut g = Matrix::zeros(self.n, self.m);
        for i in 0..self.n {
            for j in 0..self.m {
                if self.feasible[i * self.m + j] {
                    g.set(i, j, self.log_hr[i * self.m + j] - log_loads[j] - 1.0);
                }
            }
        }
        g
    }
}

/// Relaxed utility `sum_ij x_ij ln(h_j r_ij / L_j)`, with `0 ln(.) = 0` and
/// empty columns contributing nothing.
pub fn relaxed_utility(xf: &FractionalAssociation, rates: &RateMatrix, frames: &[FrameConfig]) -> Result<f64> {
    Ok(LogRates::new(rates, frames)?.utility(xf.matrix()))
}

/// Same as [`relaxed_utility`] on an unchecked matrix, for numerical probes
/// that step slightly outside the feasible set.
pub fn relaxed_utility_raw(x: &Matrix, rates: &RateMatrix, frames: &[FrameConfig]) -> Result<f64> {
    Ok(LogRates::new(rates, frames)?.utility(x))
}

/// Analytic gradient: `dU/dx_ij = ln(h_j r_ij / L_j) - 1` on feasible links,
/// zero elsewhere.
pub fn relaxed_gradient(x: &Matrix, rates: &RateMatrix, frames: &[FrameConfig]) -> Result<Matrix> {
    Ok(LogRates::new(rates, frames)?.gradient(x))
}

/// Euclidean projection of `v` onto `{y >= 0, sum y <= 1}` restricted to the
/// coordinates where `mask` is set; the rest are pinned to zero.
pub fn project_capped_simplex(v: &[f64], mask: &[bool]) -> Vec<f64> {
    let mut out: Vec<f64> = v.iter().zip(mask).map(|(&x, &ok)| if ok { x.max(0.0) } else { 0.0 }).collect();
    if out.iter().sum::<f64>() <= 1.0 {
        return out;
    }
    // project onto the simplex sum = 1 by the sort-and-threshold rule
    let mut sorted: Vec<f64> = v.iter().zip(mask).filter(|(_, &ok)| ok).map(|(&x, _)| x).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    for (o, (&x, &ok)) in out.iter_mut().zip(v.iter().zip(mask)) {
        *o = if ok { (x - theta).max(0.0) } else { 0.0 };
    }
    out
}

/// Result of the relaxed ascent.
#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    pub x: FractionalAssociation,
    pub utility: f64,
    pub iterations: usize,
    /// False when `max_iters` ran out before the improvement fell below `tol`.
    pub converged: bool,
    /// Utility after every accepted step, starting with the initial point.
    pub trace: Vec<f64>,
}

/// Projected gradient ascent on the relaxed utility.
///
/// Starts from the uniform split over each client's reachable APs and uses a
/// backtracking (Armijo) step, so the utility trace never decreases. On exit
/// every row is rescaled to sum to exactly one.
pub fn solve_relaxed(rates: &RateMatrix, frames: &[FrameConfig], params: &RelaxedSolverParams) -> Result<RelaxedSolution> {
    params.validate()?;
    let lr = LogRates::new(rates, frames)?;
    let (n, m) = (lr.n, lr.m);
    let mut x = Matrix::zeros(n, m);
    for i in 0..n {
        let k = lr.feasible[i * m..(i + 1) * m].iter().filter(|&&f| f).count();
        for j in 0..m {
            if lr.feasible[i * m + j] {
                x.set(i, j, 1.0 / k as f64);
            }
        }
    }
    let mut u = lr.utility(&x);
    let mut trace = vec![u];
    let mut step = params.step;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iters {
        iterations += 1;
        let g = lr.gradient(&x);
        let mut accepted = None;
        loop {
            let mut y = Matrix::zeros(n, m);
            let mut moved = 0.0f64;
            let mut ascent = 0.0;
            for i in 0..n {
                let target: Vec<f64> = x.row(i).iter().zip(g.row(i)).map(|(a, b)| a + step * b).collect();
                let p = project_capped_simplex(&target, &lr.feasible[i * m..(i + 1) * m]);
                for j in 0..m {
                    let d = p[j] - x.get(i, j);
                    moved = moved.max(d.abs());
                    ascent += g.get(i, j) * d;
                }
                y.row_mut(i).copy_from_slice(&p);
            }
            if moved < params.projection_tol {
                break;
            }
            let uy = lr.utility(&y);
            if uy >= u + ARMIJO * ascent {
                accepted = Some((y, uy));
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                break;
            }
        }
        let Some((y, uy)) = accepted else {
            converged = true;
            break;
        };
        let gain = uy - u;
        x = y;
        u = uy;
        trace.push(u);
        step = (step * 2.0).min(MAX_STEP);
        if gain < params.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("relaxed solver stopped after {iterations} iterations without converging");
    }

    for i in 0..n {
        let s: f64 = x.row(i).iter().sum();
        if s > 0.0 {
            x.row_mut(i).iter_mut().for_each(|v| *v /= s);
        } else {
            let feasible = rates.feasible_aps(i);
            for &j in &feasible {
                x.set(i, j, 1.0 / feasible.len() as f64);
            }
        }
    }
    let utility = lr.utility(&x);
    Ok(RelaxedSolution { x: FractionalAssociation::from_matrix_unchecked(x), utility, iterations, converged, trace })
}

/// Maximum-likelihood rounding: every client takes its largest fraction,
/// ties to the lowest AP index. Rows without mass fall back to the
/// highest-rate AP.
pub fn round_ml(xf: &FractionalAssociation, rates: &RateMatrix) -> Association {
    let m = xf.matrix();
    let aps = (0..m.rows())
        .map(|i| {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..m.cols() {
                let v = m.get(i, j);
                if rates.feasible(i, j) && v > 0.0 && best.map_or(true, |(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            best.map_or_else(|| argmax_rate(rates, i), |(j, _)| j)
        })
        .collect();
    Association::from_vec_unchecked(aps)
}

pub(crate) fn argmax_rate(rates: &RateMatrix, client: usize) -> usize {
    let row = rates.row(client);
    let mut best = 0;
    for j in 1..row.len() {
        if row[j] > row[best] {
            best = j;
        }
    }
    best
}

/// Iterative rounding.
///
/// Runs exactly `N` selection steps. Each step picks the largest fraction
/// `x'_{i,j}` among undecided clients (ties per `tie`), assigns that client to
/// that AP, and spreads the client's fractions on every *other* AP `j` evenly
/// over the undecided clients that can reach `j`. A share with no such
/// recipient is dropped. Returns the association and the step count.
pub fn round_iterative<R: Rng + ?Sized>(
    xf: &FractionalAssociation,
    rates: &RateMatrix,
    tie: TieBreak,
    rng: &mut R,
) -> (Association, usize) {
    let mut x = xf.matrix().clone();
    let (n, m) = (x.rows(), x.cols());
    let mut decided = vec![false; n];
    let mut aps = vec![0usize; n];
    let mut steps = 0;
    let mut ties = Vec::new();

    for _ in 0..n {
        let mut best = f64::NEG_INFINITY;
        ties.clear();
        for i in (0..n).filter(|&i| !decided[i]) {
            for j in (0..m).filter(|&j| rates.feasible(i, j)) {
                let v = x.get(i, j);
                if v > best {
                    best = v;
                    ties.clear();
                    ties.push((i, j));
                } else if v == best {
                    ties.push((i, j));
                }
            }
        }
        let (ci, cj) = match tie {
            TieBreak::Lowest => ties[0],
            TieBreak::Random => ties[rng.gen_range(0..ties.len())],
        };
        steps += 1;

        for j in (0..m).filter(|&j| j != cj) {
            let freed = x.get(ci, j);
            if freed == 0.0 {
                continue;
            }
            let recipients: Vec<usize> = (0..n).filter(|&i| i != ci && !decided[i] && rates.feasible(i, j)).collect();
            if recipients.is_empty() {
                continue;
            }
            let share = freed / recipients.len() as f64;
            for i in recipients {
                x.set(i, j, x.get(i, j) + share);
            }
        }
        decided[ci] = true;
        aps[ci] = cj;
        for j in 0..m {
            x.set(ci, j, if j == cj { 1.0 } else { 0.0 });
        }
    }
    (Association::from_vec_unchecked(aps), steps)
}

/// Options for [`solve_saturation`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SaturationOptions {
    pub relaxed: RelaxedSolverParams,
    pub tie: TieBreak,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SaturationSolution {
    pub association: Association,
    pub airtime: AirtimeAllocation,
    pub relaxed: RelaxedSolution,
    pub report: SolveReport,
}

/// Relaxed ascent, iterative rounding, then equal airtime on every AP.
pub fn solve_saturation(rates: &RateMatrix, frames: &[FrameConfig], opts: &SaturationOptions) -> Result<SaturationSolution> {
    let start = Instant::now();
    let relaxed = solve_relaxed(rates, frames, &opts.relaxed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (association, _) = round_iterative(&relaxed.x, rates, opts.tie, &mut rng);
    let airtime = equal_airtime(&association, rates.n_aps());
    let s = throughput(&association, &airtime, rates, frames);
    let u = utility(&s)?;
    let mut report = SolveReport::new("proposed-sat", opts.seed, s, u);
    report.iterations = relaxed.iterations;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(SaturationSolution { association, airtime, relaxed, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{equal_airtime_utility, uniform_frames};

    fn frames(m: usize) -> Vec<FrameConfig> {
        uniform_frames(m, FrameConfig::default())
    }

    fn frac(rows: &[Vec<f64>], r: &RateMatrix) -> FractionalAssociation {
        FractionalAssociation::new(Matrix::from_rows(rows).unwrap(), r).unwrap()
    }

    #[test]
    fn relaxed_utility_matches_integer_utility() {
        let r = RateMatrix::from_rows(&[vec![3e9, 1e9], vec![2e9, 2.5e9], vec![1e9, 4e9]]).unwrap();
        let f = frames(2);
        for aps in [vec![0, 0, 1], vec![1, 1, 1], vec![0, 1, 0]] {
            let x = Association::new(aps, &r).unwrap();
            let xf = FractionalAssociation::from_association(&x, 2);
            let a = relaxed_utility(&xf, &r, &f).unwrap();
            let b = equal_airtime_utility(&x, &r, &f);
            assert!((a - b).abs() < 1e-9 * b.abs());
        }
    }

    #[test]
    fn relaxed_utility_symmetric_half_split() {
        let r = RateMatrix::from_rows(&[vec![2e9, 2e9], vec![2e9, 2e9]]).unwrap();
        let f = frames(2);
        let u = relaxed_utility(&frac(&[vec![0.5, 0.5], vec![0.5, 0.5]], &r), &r, &f).unwrap();
        assert!((u - 2.0 * (0.9 * 2e9f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn projection_cases() {
        let all = [true, true, true];
        assert_eq!(project_capped_simplex(&[0.2, 0.3, -0.1], &all), vec![0.2, 0.3, 0.0]);
        let p = project_capped_simplex(&[1.0, 1.0, 0.0], &all);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15 && p[2] == 0.0);
        let p = project_capped_simplex(&[5.0, 1.0, 9.0], &[true, true, false]);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn single_ap_relaxed_is_all_ones() {
        let r = RateMatrix::from_rows(&[vec![1e9], vec![2e9], vec![3e9]]).unwrap();
        let s = solve_relaxed(&r, &frames(1), &RelaxedSolverParams::default()).unwrap();
        for i in 0..3 {
            assert!((s.x.get(i, 0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_two_by_two_relaxed_optimum() {
        let r = RateMatrix::from_rows(&[vec![2e9, 2e9], vec![2e9, 2e9]]).unwrap();
        let s = solve_relaxed(&r, &frames(2), &RelaxedSolverParams::default()).unwrap();
        assert!((s.utility - 2.0 * (0.9 * 2e9f64).ln()).abs() < 1e-6);
    }

    #[test]
    fn trace_never_decreases() {
        let r = RateMatrix::from_rows(&[
            vec![6.7e9, 1.3e9, 0.0, 2.0e9],
            vec![4.1e9, 4.1e9, 0.69e9, 0.0],
            vec![0.69e9, 5.2e9, 2.7e9, 3.4e9],
            vec![2.0e9, 0.0, 6.7e9, 1.3e9],
            vec![3.4e9, 2.7e9, 2.7e9, 4.1e9],
        ])
        .unwrap();
        let s = solve_relaxed(&r, &frames(4), &RelaxedSolverParams::default()).unwrap();
        assert!(s.converged);
        for w in s.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        for i in 0..5 {
            let sum: f64 = (0..4).map(|j| s.x.get(i, j)).sum();
            assert!((sum - 1.0).abs() <= 1e-6);
            for j in 0..4 {
                assert!(r.feasible(i, j) || s.x.get(i, j) == 0.0);
            }
        }
    }

    #[test]
    fn ml_rounding() {
        let r = RateMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let xf = frac(&[vec![0.6, 0.4], vec![0.5, 0.5], vec![0.0, 1.0]], &r);
        assert_eq!(round_ml(&xf, &r).as_slice(), &[0, 0, 1]);
    }

    #[test]
    fn iterative_rounding_hand_trace() {
        let r = RateMatrix::from_rows(&[vec![1e9, 1e9], vec![1e9, 1e9]]).unwrap();
        let xf = frac(&[vec![0.6, 0.4], vec![0.4, 0.6]], &r);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (x, steps) = round_iterative(&xf, &r, TieBreak::Lowest, &mut rng);
        assert_eq!(x.as_slice(), &[0, 1]);
        assert_eq!(steps, 2);
    }

    #[test]
    fn iterative_rounding_identity_on_integers() {
        let r = RateMatrix::from_rows(&vec![vec![1.0, 1.0, 1.0]; 4]).unwrap();
        let x0 = Association::new(vec![2, 0, 1, 2], &r).unwrap();
        let xf = FractionalAssociation::from_association(&x0, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (x, steps) = round_iterative(&xf, &r, TieBreak::Random, &mut rng);
        assert_eq!(x, x0);
        assert_eq!(steps, 4);
        assert_eq!(round_ml(&xf, &r), x0);
    }

    #[test]
    fn iterative_rounding_single_ap() {
        let r = RateMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let xf = frac(&[vec![1.0], vec![1.0], vec![1.0]], &r);
        let (x, _) = round_iterative(&xf, &r, TieBreak::Random, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(x.as_slice(), &[0, 0, 0]);
    }

    #[test]
    fn freed_mass_to_unreachable_ap_is_dropped() {
        // client 1 cannot reach AP 1, so client 0's share there has no recipient
        let r = RateMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let xf = frac(&[vec![0.3, 0.7], vec![0.5, 0.0]], &r);
        let (x, steps) = round_iterative(&xf, &r, TieBreak::Lowest, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(x.as_slice(), &[1, 0]);
        assert_eq!(steps, 2);
    }

    #[test]
    fn saturation_symmetric_spreads_clients() {
        let r = RateMatrix::from_rows(&[vec![2e9, 2e9], vec![2e9, 2e9]]).unwrap();
        let sol = solve_saturation(&r, &frames(2), &SaturationOptions::default()).unwrap();
        let mut aps = sol.association.as_slice().to_vec();
        aps.sort();
        assert_eq!(aps, vec![0, 1]);
        assert!((sol.report.utility - 2.0 * (0.9 * 2e9f64).ln()).abs() < 1e-9);
    }
}
