//! Throughput, utility, and feasibility formulas shared by all policies.

use crate::error::{Error, Result};
use crate::model::{AirtimeAllocation, Association, FrameConfig, RateMatrix, TOL};

/// Splits every AP's data interval equally among its clients.
pub fn equal_airtime(x: &Association, n_aps: usize) -> AirtimeAllocation {
    let loads = x.loads(n_aps);
    let mut t = AirtimeAllocation::zeros(x.n_clients(), n_aps);
    for i in 0..x.n_clients() {
        let j = x.ap_of(i);
        t.set(i, j, 1.0 / loads[j] as f64);
    }
    t
}

/// Throughput `t * h * r` of every client on its associated AP, bits/s.
pub fn throughput(x: &Association, t: &AirtimeAllocation, rates: &RateMatrix, frames: &[FrameConfig]) -> Vec<f64> {
    (0..x.n_clients())
        .map(|i| {
            let j = x.ap_of(i);
            t.get(i, j) * frames[j].efficiency() * rates.get(i, j)
        })
        .collect()
}

/// Sum of natural-log throughputs. Rejects any non-positive entry.
pub fn utility(throughputs: &[f64]) -> Result<f64> {
    let mut u = 0.0;
    for (client, &s) in throughputs.iter().enumerate() {
        if !(s > 0.0) {
            return Err(Error::DegenerateAllocation { client, throughput: s });
        }
        u += s.ln();
    }
    Ok(u)
}

/// Utility for display only: throughputs below 1 bit/s count as 1 bit/s.
pub fn display_utility(throughputs: &[f64]) -> f64 {
    throughputs.iter().map(|s| s.max(1.0).ln()).sum()
}

/// Equal-airtime utility of an association: `sum_i ln(h_j r_ij / n_j)`.
pub fn equal_airtime_utility(x: &Association, rates: &RateMatrix, frames: &[FrameConfig]) -> f64 {
    let loads = x.loads(rates.n_aps());
    (0..x.n_clients())
        .map(|i| {
            let j = x.ap_of(i);
            (frames[j].efficiency() * rates.get(i, j) / loads[j] as f64).ln()
        })
        .sum()
}

/// A single violated finite-load constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    /// AP hands out more than its data interval: `sum_i t_ij > 1`.
    Airtime { ap: usize, used: f64 },
    /// Client served beyond its offered load: `t h r > lambda`.
    Load { client: usize, served: f64, demand: f64 },
}

/// Checks the airtime and load constraints of the finite-load problem.
/// An empty result means feasible.
pub fn check_finite_load_feasibility(
    x: &Association,
    t: &AirtimeAllocation,
    rates: &RateMatrix,
    frames: &[FrameConfig],
    demand: &[f64],
) -> Result<Vec<Violation>> {
    let (n, m) = (rates.n_clients(), rates.n_aps());
    if x.n_clients() != n || demand.len() != n || frames.len() != m || t.matrix().rows() != n || t.matrix().cols() != m
    {
        return Err(Error::Shape("feasibility check inputs disagree in size".into()));
    }
    let mut out = Vec::new();
    for j in 0..m {
        let used = t.column_sum(j);
        if used > 1.0 + TOL {
            out.push(Violation::Airtime { ap: j, used });
        }
    }
    for (client, served) in throughput(x, t, rates, frames).into_iter().enumerate() {
        if served > demand[client] * (1.0 + TOL) {
            out.push(Violation::Load { client, served, demand: demand[client] });
        }
    }
    Ok(out)
}

/// Frames for `m` APs sharing one configuration.
pub fn uniform_frames(m: usize, frame: FrameConfig) -> Vec<FrameConfig> {
    vec![frame; m]
}

/// Served throughput under a finite demand: whatever the airtime would carry,
/// capped at the client's offered load.
pub fn served_throughput(raw: &[f64], demand: &[f64]) -> Vec<f64> {
    raw.iter().zip(demand).map(|(s, d)| s.min(*d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames(m: usize) -> Vec<FrameConfig> {
        uniform_frames(m, FrameConfig::new(0.1, 0.01).unwrap())
    }

    #[test]
    fn equal_airtime_single_ap_three_clients() {
        let r = RateMatrix::from_rows(&[vec![1e9], vec![1e9], vec![1e9]]).unwrap();
        let x = Association::new(vec![0, 0, 0], &r).unwrap();
        let t = equal_airtime(&x, 1);
        let f = frames(1);
        for i in 0..3 {
            assert!((t.get(i, 0) - 1.0 / 3.0).abs() < 1e-15);
            assert!((t.absolute(i, 0, &f[0]) - 0.03).abs() < 1e-12);
        }
        let s = throughput(&x, &t, &r, &f);
        for v in s {
            assert!((v - 0.3e9).abs() < 1e-3);
        }
    }

    #[test]
    fn equal_airtime_identity_and_split() {
        let r = RateMatrix::from_rows(&[vec![1.0]]).unwrap();
        let x = Association::new(vec![0], &r).unwrap();
        assert_eq!(equal_airtime(&x, 1).get(0, 0), 1.0);

        let r = RateMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let x = Association::new(vec![0, 0, 1], &r).unwrap();
        let t = equal_airtime(&x, 2);
        assert_eq!((t.column_sum(0), t.column_sum(1)), (1.0, 1.0));
        assert_eq!((t.get(0, 0), t.get(1, 0), t.get(2, 1)), (0.5, 0.5, 1.0));
        assert_eq!(t.get(2, 0), 0.0);
    }

    #[test]
    fn throughput_products() {
        let r = RateMatrix::from_rows(&[vec![2e9]]).unwrap();
        let x = Association::new(vec![0], &r).unwrap();
        let mut t = AirtimeAllocation::zeros(1, 1);
        t.set(0, 0, 0.25);
        assert!((throughput(&x, &t, &r, &frames(1))[0] - 0.45e9).abs() < 1e-3);
        t.set(0, 0, 0.0);
        assert_eq!(throughput(&x, &t, &r, &frames(1))[0], 0.0);
    }

    #[test]
    fn utility_values_and_errors() {
        assert_eq!(utility(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!((utility(&[2.0, 8.0]).unwrap() - 16f64.ln()).abs() < 1e-15);
        assert!(matches!(utility(&[1.0, 0.0]), Err(Error::DegenerateAllocation { client: 1, .. })));
        assert_eq!(display_utility(&[0.0, 1.0]), 0.0);
    }

    #[test]
    fn rate_rescale_shifts_utility_by_n_ln_c() {
        let r = RateMatrix::from_rows(&[vec![3e9, 1e9], vec![2e9, 2.5e9], vec![1e9, 4e9]]).unwrap();
        let f = frames(2);
        let c = 7.5;
        let rc = r.scaled(c).unwrap();
        for aps in [vec![0, 0, 1], vec![0, 1, 1], vec![1, 0, 0]] {
            let x = Association::new(aps, &r).unwrap();
            let u1 = equal_airtime_utility(&x, &r, &f);
            let u2 = equal_airtime_utility(&x, &rc, &f);
            assert!((u2 - u1 - 3.0 * c.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn feasibility_report() {
        let r = RateMatrix::from_rows(&[vec![1e9], vec![1e9]]).unwrap();
        let f = frames(1);
        let x = Association::new(vec![0, 0], &r).unwrap();
        let t = equal_airtime(&x, 1);
        // each gets 0.45 Gb/s, demands 0.6 Gb/s -> load slack, airtime tight
        assert!(check_finite_load_feasibility(&x, &t, &r, &f, &[0.6e9, 0.6e9]).unwrap().is_empty());
        // demand below served -> load violation
        let v = check_finite_load_feasibility(&x, &t, &r, &f, &[0.3e9, 0.6e9]).unwrap();
        assert!(matches!(v.as_slice(), [Violation::Load { client: 0, .. }]));

        let mut over = AirtimeAllocation::zeros(2, 1);
        over.set(0, 0, 0.6);
        over.set(1, 0, 0.6);
        let v = check_finite_load_feasibility(&x, &over, &r, &f, &[1e10, 1e10]).unwrap();
        assert!(matches!(v.as_slice(), [Violation::Airtime { ap: 0, .. }]));

        let zero = AirtimeAllocation::zeros(2, 1);
        assert!(check_finite_load_feasibility(&x, &zero, &r, &f, &[1.0, 1.0]).unwrap().is_empty());
    }
}
