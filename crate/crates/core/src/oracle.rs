//! Brute-force ground truth for small instances, and a finite-difference
//! check of the relaxed gradient.
//!
//! Enumeration walks a mixed-radix counter over every client's reachable
//! APs in lexicographic order and keeps a streaming argmax; strict
//! improvement is required to replace the incumbent, so ties resolve to the
//! lexicographically smallest association. Per-AP scores are cached by
//! client subset, which keeps every candidate's score an exact sum of the
//! same cached terms regardless of enumeration path.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::loadsolve::{finite_utility, water_filling};
use crate::metrics::{equal_airtime, throughput, utility};
use crate::model::{AirtimeAllocation, Association, FrameConfig, Matrix, RateMatrix};
use crate::satsolve::{relaxed_gradient, relaxed_utility_raw};

/// Default cap on the number of enumerated associations.
pub const DEFAULT_SEARCH_LIMIT: u64 = 10_000_000;

/// Environment variable overriding [`DEFAULT_SEARCH_LIMIT`].
pub const SEARCH_LIMIT_ENV: &str = "MMWAVE_ORACLE_LIMIT";

/// Largest client count for which per-AP subset scores are tabulated.
const MAX_CACHED_CLIENTS: usize = 16;

pub fn search_limit_from_env() -> u64 {
    std::env::var(SEARCH_LIMIT_ENV).ok().and_then(|v| v.parse().ok()).unwrap_or(DEFAULT_SEARCH_LIMIT)
}

/// Number of feasible associations, `prod_i |{j : r_ij > 0}|`.
pub fn search_space(rates: &RateMatrix) -> f64 {
    (0..rates.n_clients()).map(|i| rates.feasible_aps(i).len() as f64).product()
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub association: Association,
    pub airtime: AirtimeAllocation,
    pub utility: f64,
    pub candidates: u64,
}

/// Best association under equal airtime.
pub fn exhaustive_saturation(rates: &RateMatrix, frames: &[FrameConfig], limit: u64) -> Result<OracleSolution> {
    let score = |j: usize, members: &[usize]| -> f64 {
        let k = members.len() as f64;
        let h = frames[j].efficiency();
        members.iter().map(|&i| (h * rates.get(i, j) / k).ln()).sum()
    };
    let (association, candidates) = search(rates, limit, score)?;
    let airtime = equal_airtime(&association, rates.n_aps());
    let utility = utility(&throughput(&association, &airtime, rates, frames))?;
    Ok(OracleSolution { association, airtime, utility, candidates })
}

/// Best association when every AP water-fills its airtime.
pub fn exhaustive_finite(rates: &RateMatrix, frames: &[FrameConfig], demand: &[f64], limit: u64) -> Result<OracleSolution> {
    if demand.len() != rates.n_clients() {
        return Err(Error::Shape("demand length differs from client count".into()));
    }
    let score = |j: usize, members: &[usize]| -> f64 {
        let needs: Vec<f64> = members.iter().map(|&i| demand[i] / (frames[j].efficiency() * rates.get(i, j))).collect();
        let h = frames[j].efficiency();
        members
            .iter()
            .zip(crate::loadsolve::max_min_share(&needs))
            .map(|(&i, t)| (t * h * rates.get(i, j)).ln())
            .sum()
    };
    let (association, candidates) = search(rates, limit, score)?;
    let airtime = water_filling(&association, rates, frames, demand)?;
    let utility = finite_utility(&association, &airtime, rates, frames)?;
    Ok(OracleSolution { association, airtime, utility, candidates })
}

/// Exhaustive argmax of `sum_j score(j, clients on j)`.
fn search<F>(rates: &RateMatrix, limit: u64, score: F) -> Result<(Association, u64)>
where
    F: Fn(usize, &[usize]) -> f64 + Sync,
{
    let cardinality = search_space(rates);
    if cardinality > limit as f64 {
        return Err(Error::SearchSpaceTooLarge { cardinality, limit });
    }
    let (n, m) = (rates.n_clients(), rates.n_aps());
    let options: Vec<Vec<usize>> = (0..n).map(|i| rates.feasible_aps(i)).collect();
    let scorer = Scorer::new(rates, &score);

    // partition by the first client's AP; merge keeps the earliest maximum
    let best = options[0]
        .par_iter()
        .map(|&first| {
            let mut choice = vec![0usize; n];
            let mut aps: Vec<usize> = options.iter().map(|o| o[0]).collect();
            aps[0] = first;
            let mut best: Option<(f64, Vec<usize>)> = None;
            loop {
                let u = scorer.total(&aps, m);
                if best.as_ref().map_or(true, |(b, _)| u > *b) {
                    best = Some((u, aps.clone()));
                }
                // advance the counter over clients 1..n, last client fastest
                let mut k = n;
                loop {
                    if k == 1 {
                        return best.expect("at least one candidate");
                    }
                    k -= 1;
                    choice[k] += 1;
                    if choice[k] < options[k].len() {
                        aps[k] = options[k][choice[k]];
                        break;
                    }
                    choice[k] = 0;
                    aps[k] = options[k][0];
                }
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None::<(f64, Vec<usize>)>, |acc, cand| match acc {
            Some(a) if a.0 >= cand.0 => Some(a),
            _ => Some(cand),
        })
        .expect("non-empty partition");
    Ok((Association::from_vec_unchecked(best.1), cardinality as u64))
}

struct Scorer<'a, F> {
    score: &'a F,
    /// `table[j][mask]` when `n <= MAX_CACHED_CLIENTS`.
    table: Option<Vec<Vec<f64>>>,
}

impl<'a, F> Scorer<'a, F>
where
    F: Fn(usize, &[usize]) -> f64 + Sync,
{
    fn new(rates: &RateMatrix, score: &'a F) -> Self {
        let (n, m) = (rates.n_clients(), rates.n_aps());
        if n > MAX_CACHED_CLIENTS {
            return Self { score, table: None };
        }
        let table = (0..m)
            .into_par_iter()
            .map(|j| {
                let reach: u32 = (0..n).filter(|&i| rates.feasible(i, j)).fold(0, |acc, i| acc | (1 << i));
                let mut row = vec![0.0; 1 << n];
                let mut members = Vec::with_capacity(n);
                // every non-empty submask of the reachable set
                let mut sub = reach;
                while sub != 0 {
                    members.clear();
                    members.extend((0..n).filter(|&i| sub & (1 << i) != 0));
                    row[sub as usize] = score(j, &members);
                    sub = (sub - 1) & reach;
                }
                row
            })
            .collect();
        Self { score, table: Some(table) }
    }

    fn total(&self, aps: &[usize], m: usize) -> f64 {
        match &self.table {
            Some(table) => {
                let mut masks = [0usize; 64];
                let mut heap;
                let masks: &mut [usize] = if m <= 64 {
                    &mut masks[..m]
                } else {
                    heap = vec![0usize; m];
                    &mut heap
                };
                for (i, &j) in aps.iter().enumerate() {
                    masks[j] |= 1 << i;
                }
                (0..m).map(|j| table[j][masks[j]]).sum()
            }
            None => {
                let mut groups: Vec<Vec<usize>> = vec![Vec::new(); m];
                for (i, &j) in aps.iter().enumerate() {
                    groups[j].push(i);
                }
                groups.iter().enumerate().map(|(j, g)| if g.is_empty() { 0.0 } else { (self.score)(j, g) }).sum()
            }
        }
    }
}

/// Largest relative gap between the analytic relaxed gradient and central
/// finite differences (step `1e-6`) over the feasible coordinates.
pub fn gradient_check(x: &Matrix, rates: &RateMatrix, frames: &[FrameConfig]) -> Result<f64> {
    const H: f64 = 1e-6;
    let analytic = relaxed_gradient(x, rates, frames)?;
    let mut worst = 0.0f64;
    let mut probe = x.clone();
    for i in 0..x.rows() {
        for j in (0..x.cols()).filter(|&j| rates.feasible(i, j)) {
            let v = x.get(i, j);
            probe.set(i, j, v + H);
            let up = relaxed_utility_raw(&probe, rates, frames)?;
            probe.set(i, j, v - H);
            let down = relaxed_utility_raw(&probe, rates, frames)?;
            probe.set(i, j, v);
            let numeric = (up - down) / (2.0 * H);
            let a = analytic.get(i, j);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-12);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::uniform_frames;

    fn frames(m: usize) -> Vec<FrameConfig> {
        uniform_frames(m, FrameConfig::default())
    }

    #[test]
    fn single_ap_unique_association() {
        let r = RateMatrix::from_rows(&[vec![1e9], vec![2e9]]).unwrap();
        let o = exhaustive_saturation(&r, &frames(1), 100).unwrap();
        assert_eq!(o.association.as_slice(), &[0, 0]);
        assert_eq!(o.candidates, 1);
    }

    #[test]
    fn symmetric_pair_spreads() {
        let r = RateMatrix::from_rows(&[vec![2e9, 2e9], vec![2e9, 2e9]]).unwrap();
        let o = exhaustive_saturation(&r, &frames(2), 100).unwrap();
        // ties resolve lexicographically: [0, 1] before [1, 0]
        assert_eq!(o.association.as_slice(), &[0, 1]);
        assert!((o.utility - 2.0 * (0.9 * 2e9f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn candidate_count_is_product_of_options() {
        let r = RateMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 1.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(search_space(&r), 6.0);
        assert_eq!(exhaustive_saturation(&r, &frames(3), 6).unwrap().candidates, 6);
        assert!(matches!(
            exhaustive_saturation(&r, &frames(3), 5),
            Err(Error::SearchSpaceTooLarge { limit: 5, .. })
        ));
    }

    #[test]
    fn satisfiable_demands_reach_log_sum() {
        let r = RateMatrix::from_rows(&[vec![4e9, 1e9], vec![1e9, 4e9], vec![3e9, 3e9]]).unwrap();
        let d = [0.4e9, 0.5e9, 0.6e9];
        let o = exhaustive_finite(&r, &frames(2), &d, 100).unwrap();
        let bound: f64 = d.iter().map(|v| v.ln()).sum();
        assert!((o.utility - bound).abs() < 1e-9);
    }

    #[test]
    fn oracle_moves_client_off_its_best_ap() {
        // AP0 is the best link for everyone but cannot carry clients 0 and 1
        // together with client 2; client 2 must go to the slower AP1.
        let r = RateMatrix::from_rows(&[vec![2e9, 0.0], vec![2e9, 0.0], vec![2e9, 1e9]]).unwrap();
        let d = [0.8e9, 0.8e9, 0.5e9];
        let o = exhaustive_finite(&r, &frames(2), &d, 100).unwrap();
        assert_eq!(o.association.as_slice(), &[0, 0, 1]);
        let bound: f64 = d.iter().map(|v| v.ln()).sum();
        assert!((o.utility - bound).abs() < 1e-9);
    }

    #[test]
    fn uncached_path_agrees_with_cached() {
        // 17 single-option clients plus one free client forces the uncached scorer
        let mut rows = vec![vec![1e9, 0.0]; 17];
        rows.push(vec![1e9, 0.5e9]);
        let r = RateMatrix::from_rows(&rows).unwrap();
        let o = exhaustive_saturation(&r, &frames(2), 100).unwrap();
        assert_eq!(o.association.ap_of(17), 1);
    }
}
