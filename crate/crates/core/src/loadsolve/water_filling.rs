use crate::error::{Error, Result};
use crate::model::{AirtimeAllocation, Association, FrameConfig, RateMatrix};

/// Airtime fraction whose throughput `t h r` equals `demand` exactly.
/// Values above one mean the demand exceeds what the AP could carry alone.
pub fn required_airtime(demand: f64, rate: f64, frame: &FrameConfig) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::Invalid(format!("required airtime on a zero-rate link (demand {demand})")));
    }
    Ok(demand / (frame.efficiency() * rate))
}

/// Max-min fair split of a unit budget among `demands`.
///
/// Clients whose demand fits under the current fair share are served in
/// full, in non-decreasing demand order; once the smallest remaining demand
/// exceeds the fair share, every remaining client gets that share. The
/// result satisfies `t_k = min(d_k, level)` with `sum t = min(1, sum d)`.
pub fn max_min_share(demands: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..demands.len()).collect();
    order.sort_by(|&a, &b| demands[a].total_cmp(&demands[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; demands.len()];
    let mut residual = 1.0;
    for (pos, &k) in order.iter().enumerate() {
        let fair = residual / (order.len() - pos) as f64;
        if demands[k] <= fair {
            out[k] = demands[k];
            residual -= demands[k];
        } else {
            for &rest in &order[pos..] {
                out[rest] = fair;
            }
            break;
        }
    }
    out
}

/// Per-AP max-min airtime allocation against each client's required airtime.
pub fn water_filling(
    x: &Association,
    rates: &RateMatrix,
    frames: &[FrameConfig],
    demand: &[f64],
) -> Result<AirtimeAllocation> {
    let (n, m) = (rates.n_clients(), rates.n_aps());
    if x.n_clients() != n || demand.len() != n || frames.len() != m {
        return Err(Error::Shape("water filling inputs disagree in size".into()));
    }
    let mut t = AirtimeAllocation::zeros(n, m);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); m];
    for i in 0..n {
        members[x.ap_of(i)].push(i);
    }
    let mut needs = Vec::new();
    for (j, clients) in members.iter().enumerate() {
        if clients.is_empty() {
            continue;
        }
        needs.clear();
        for &i in clients {
            let r = rates.get(i, j);
            if !(r > 0.0) {
                return Err(Error::InfeasibleLink { client: i, ap: j });
            }
            needs.push(required_airtime(demand[i], r, &frames[j])?);
        }
        for (&i, share) in clients.iter().zip(max_min_share(&needs)) {
            t.set(i, j, share);
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{throughput, uniform_frames};

    /// Water level found by bisection on `sum min(d, level) = min(1, sum d)`.
    fn bisection_level(d: &[f64]) -> f64 {
        let target = d.iter().sum::<f64>().min(1.0);
        let (mut lo, mut hi) = (0.0, d.iter().cloned().fold(0.0, f64::max));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if d.iter().map(|v| v.min(mid)).sum::<f64>() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    #[test]
    fn underloaded_ap_serves_every_demand() {
        let t = max_min_share(&[0.2, 0.3]);
        assert_eq!(t, vec![0.2, 0.3]);
        assert!((1.0 - t.iter().sum::<f64>() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn overloaded_pair_splits_equally() {
        assert_eq!(max_min_share(&[0.8, 0.8]), vec![0.5, 0.5]);
    }

    #[test]
    fn three_clients_level_045() {
        let d = [0.1, 0.5, 0.9];
        let t = max_min_share(&d);
        assert!((t[0] - 0.1).abs() < 1e-15);
        assert!((t[1] - 0.45).abs() < 1e-15);
        assert!((t[2] - 0.45).abs() < 1e-15);
        assert!((bisection_level(&d) - 0.45).abs() < 1e-12);
    }

    #[test]
    fn required_airtime_cases() {
        let f = FrameConfig::default();
        assert!((required_airtime(0.9e9, 1e9, &f).unwrap() - 1.0).abs() < 1e-15);
        assert!((required_airtime(0.225e9, 1e9, &f).unwrap() - 0.25).abs() < 1e-15);
        assert!(required_airtime(2e9, 1e9, &f).unwrap() > 1.0);
        assert!(required_airtime(1.0, 0.0, &f).is_err());
    }

    #[test]
    fn water_filling_serves_exact_demand_when_it_fits() {
        let r = RateMatrix::from_rows(&[vec![2e9, 1e9], vec![1e9, 3e9], vec![4e9, 1e9]]).unwrap();
        let f = uniform_frames(2, FrameConfig::default());
        let x = Association::new(vec![0, 1, 0], &r).unwrap();
        let demand = [0.3e9, 0.5e9, 0.7e9];
        let t = water_filling(&x, &r, &f, &demand).unwrap();
        t.check_consistent(&x).unwrap();
        for (s, d) in throughput(&x, &t, &r, &f).iter().zip(demand) {
            assert!((s - d).abs() <= 1e-9 * d);
        }
    }
}
