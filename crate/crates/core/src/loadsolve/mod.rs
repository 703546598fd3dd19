//! Finite-load association and airtime allocation.
//!
//! Every candidate association is scored after a max-min water-filling
//! airtime allocation on each AP; a simulated-annealing search moves clients
//! between APs, preferring moves that offload bottlenecked APs.

mod annealing;
mod perturb;
mod water_filling;

pub use annealing::{simulated_annealing, write_trace, SaOutcome, SaParams, TraceRow};
pub use perturb::{perturbate, Move, MoveKind, Perturbation};
pub use water_filling::{max_min_share, required_airtime, water_filling};

use crate::error::{Error, Result};
use crate::model::{AirtimeAllocation, Association, FrameConfig, RateMatrix, TOL};
use crate::satsolve::{solve_saturation, SaturationOptions};

/// Annealing started from the saturation solver's association.
pub fn solve_finite(
    rates: &RateMatrix,
    frames: &[FrameConfig],
    demand: &[f64],
    start: &SaturationOptions,
    params: &SaParams,
) -> Result<SaOutcome> {
    let x0 = solve_saturation(rates, frames, start)?.association;
    simulated_annealing(&x0, rates, frames, demand, params)
}

/// `sum_i ln(t_ij h_j r_ij)` over associated pairs.
pub fn finite_utility(x: &Association, t: &AirtimeAllocation, rates: &RateMatrix, frames: &[FrameConfig]) -> Result<f64> {
    let mut u = 0.0;
    for i in 0..x.n_clients() {
        let j = x.ap_of(i);
        let s = t.get(i, j) * frames[j].efficiency() * rates.get(i, j);
        if !(s > 0.0) {
            return Err(Error::DegenerateAllocation { client: i, throughput: s });
        }
        u += s.ln();
    }
    Ok(u)
}

/// Per-AP bottleneck metrics after an airtime allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckReport {
    /// Offered load the AP fails to carry, bits/s.
    pub load_deficit: Vec<f64>,
    /// Unallocated airtime expressed as bits/s at the AP's mean client rate.
    pub time_slack: Vec<f64>,
    /// `load_deficit - time_slack`.
    pub value: Vec<f64>,
}

impl BottleneckReport {
    /// APs with spare resources (`B_j < 0`).
    pub fn relieved(&self) -> Vec<usize> {
        (0..self.value.len()).filter(|&j| self.value[j] < 0.0).collect()
    }

    /// Bottlenecked APs (`B_j >= 0`).
    pub fn bottlenecked(&self) -> Vec<usize> {
        (0..self.value.len()).filter(|&j| self.value[j] >= 0.0).collect()
    }

    pub fn is_bottleneck(&self, ap: usize) -> bool {
        self.value[ap] >= 0.0
    }
}

/// Computes `B_j = B_load_j - B_time_j` for every AP.
///
/// Deficit and slack below the relative tolerance are snapped to zero, so
/// an exactly saturated AP reports `B_j = 0` and counts as a bottleneck.
pub fn bottlenecks(
    x: &Association,
    t: &AirtimeAllocation,
    rates: &RateMatrix,
    frames: &[FrameConfig],
    demand: &[f64],
) -> BottleneckReport {
    let (n, m) = (rates.n_clients(), rates.n_aps());
    let mut offered = vec![0.0; m];
    let mut served = vec![0.0; m];
    let mut used = vec![0.0; m];
    let mut rate_sum = vec![0.0; m];
    let mut count = vec![0usize; m];
    for i in 0..n {
        let j = x.ap_of(i);
        let share = t.get(i, j);
        offered[j] += demand[i];
        served[j] += share * frames[j].efficiency() * rates.get(i, j);
        used[j] += share;
        rate_sum[j] += rates.get(i, j);
        count[j] += 1;
    }
    let mut report = BottleneckReport { load_deficit: vec![0.0; m], time_slack: vec![0.0; m], value: vec![0.0; m] };
    for j in 0..m {
        let deficit = offered[j] - served[j];
        let deficit = if deficit <= TOL * offered[j] { 0.0 } else { deficit };
        let slack = 1.0 - used[j];
        let slack = if slack <= TOL { 0.0 } else { slack };
        let mean_rate = if count[j] > 0 {
            rate_sum[j] / count[j] as f64
        } else {
            let reach: Vec<f64> = (0..n).map(|i| rates.get(i, j)).filter(|&r| r > 0.0).collect();
            if reach.is_empty() {
                0.0
            } else {
                reach.iter().sum::<f64>() / reach.len() as f64
            }
        };
        report.load_deficit[j] = deficit;
        report.time_slack[j] = slack * frames[j].efficiency() * mean_rate;
        report.value[j] = report.load_deficit[j] - report.time_slack[j];
    }
    report
}

/// True when every client's throughput matches its demand within `TOL`.
pub fn all_demands_met(x: &Association, t: &AirtimeAllocation, rates: &RateMatrix, frames: &[FrameConfig], demand: &[f64]) -> bool {
    (0..x.n_clients()).all(|i| {
        let j = x.ap_of(i);
        let s = t.get(i, j) * frames[j].efficiency() * rates.get(i, j);
        (s - demand[i]).abs() <= TOL * demand[i]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::uniform_frames;

    fn frames(m: usize) -> Vec<FrameConfig> {
        uniform_frames(m, FrameConfig::default())
    }

    #[test]
    fn finite_utility_cases() {
        let r = RateMatrix::from_rows(&[vec![2e9], vec![1e9]]).unwrap();
        let f = frames(1);
        let x = Association::new(vec![0, 0], &r).unwrap();
        let demand = [0.36e9, 0.27e9];
        let t = water_filling(&x, &r, &f, &demand).unwrap();
        let u = finite_utility(&x, &t, &r, &f).unwrap();
        assert!((u - demand.iter().map(|d| d.ln()).sum::<f64>()).abs() < 1e-9);

        let mut half = t.clone();
        half.set(0, 0, t.get(0, 0) / 2.0);
        let uh = finite_utility(&x, &half, &r, &f).unwrap();
        assert!((u - uh - 2f64.ln()).abs() < 1e-12);

        let mut zero = t;
        zero.set(1, 0, 0.0);
        assert!(matches!(finite_utility(&x, &zero, &r, &f), Err(Error::DegenerateAllocation { client: 1, .. })));

        let r1 = RateMatrix::from_rows(&[vec![3e9]]).unwrap();
        let x1 = Association::new(vec![0], &r1).unwrap();
        let mut t1 = AirtimeAllocation::zeros(1, 1);
        t1.set(0, 0, 1.0);
        assert!((finite_utility(&x1, &t1, &r1, &f).unwrap() - (0.9 * 3e9f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn bottleneck_sign_rule() {
        // AP0: two clients needing 0.8 each (oversubscribed); AP1: one client needing 0.2
        let r = RateMatrix::from_rows(&[vec![1e9, 1e9], vec![1e9, 0.0], vec![0.0, 1e9]]).unwrap();
        let f = frames(2);
        let x = Association::new(vec![0, 0, 1], &r).unwrap();
        let demand = [0.72e9, 0.72e9, 0.18e9];
        let t = water_filling(&x, &r, &f, &demand).unwrap();
        let b = bottlenecks(&x, &t, &r, &f, &demand);
        assert!(b.load_deficit[0] > 0.0 && b.time_slack[0] == 0.0);
        assert!(b.load_deficit[1] == 0.0 && b.time_slack[1] > 0.0);
        assert_eq!(b.bottlenecked(), vec![0]);
        assert_eq!(b.relieved(), vec![1]);
        for j in 0..2 {
            assert!(!(b.load_deficit[j] > 0.0 && b.time_slack[j] > 0.0));
        }
    }

    #[test]
    fn exactly_saturated_ap_is_bottleneck() {
        let r = RateMatrix::from_rows(&[vec![1e9], vec![1e9]]).unwrap();
        let f = frames(1);
        let x = Association::new(vec![0, 0], &r).unwrap();
        let demand = [0.45e9, 0.45e9];
        let t = water_filling(&x, &r, &f, &demand).unwrap();
        let b = bottlenecks(&x, &t, &r, &f, &demand);
        assert_eq!(b.value[0], 0.0);
        assert!(b.is_bottleneck(0));
    }
}
