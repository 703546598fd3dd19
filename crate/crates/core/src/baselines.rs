//! Reference association policies. All are deterministic.

use crate::model::{Association, RateMatrix};
use crate::satsolve::argmax_rate;
use crate::scenario::Topology;

/// Highest-rate AP for every client, ties to the lowest AP index.
pub fn associate_snr(rates: &RateMatrix) -> Association {
    Association::from_vec_unchecked((0..rates.n_clients()).map(|i| argmax_rate(rates, i)).collect())
}

/// APs take turns, in index order, claiming their nearest unclaimed
/// reachable client. Clients no AP can claim fall back to the highest rate.
pub fn associate_greedy(topology: &Topology, rates: &RateMatrix) -> Association {
    let (n, m) = (rates.n_clients(), rates.n_aps());
    let mut assigned: Vec<Option<usize>> = vec![None; n];
    let mut remaining = n;
    while remaining > 0 {
        let mut claimed_any = false;
        for j in 0..m {
            let nearest = (0..n)
                .filter(|&i| assigned[i].is_none() && rates.feasible(i, j))
                .min_by(|&a, &b| {
                    let da = topology.clients[a].distance(&topology.aps[j]);
                    let db = topology.clients[b].distance(&topology.aps[j]);
                    da.total_cmp(&db).then(a.cmp(&b))
                });
            if let Some(i) = nearest {
                assigned[i] = Some(j);
                remaining -= 1;
                claimed_any = true;
                if remaining == 0 {
                    break;
                }
            }
        }
        if !claimed_any {
            break;
        }
    }
    Association::from_vec_unchecked(
        assigned.iter().enumerate().map(|(i, a)| a.unwrap_or_else(|| argmax_rate(rates, i))).collect(),
    )
}

/// Centralised min-max utilisation greedy, standing in for distributed
/// load-balancing association.
///
/// Clients are placed in decreasing order of `lambda_i / max_j r_ij`, each on
/// the reachable AP whose utilisation `sum lambda / r` is smallest after
/// adding it (ties to the lowest index). Pass `None` for unit demands.
pub fn associate_minmax_load(rates: &RateMatrix, demand: Option<&[f64]>) -> Association {
    let (n, m) = (rates.n_clients(), rates.n_aps());
    let load = |i: usize| demand.map_or(1.0, |d| d[i]);
    let best_rate = |i: usize| rates.row(i).iter().cloned().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (load(b) / best_rate(b)).total_cmp(&(load(a) / best_rate(a))).then(a.cmp(&b)));

    let mut utilisation = vec![0.0; m];
    let mut aps = vec![0; n];
    for i in order {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..m).filter(|&j| rates.feasible(i, j)) {
            let u = utilisation[j] + load(i) / rates.get(i, j);
            if best.map_or(true, |(_, b)| u < b) {
                best = Some((j, u));
            }
        }
        let (j, u) = best.expect("rate matrix guarantees a reachable AP");
        utilisation[j] = u;
        aps[i] = j;
    }
    Association::from_vec_unchecked(aps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::Point;

    fn topo(aps: Vec<Point>, clients: Vec<Point>) -> Topology {
        Topology::new(30.0, 30.0, aps, clients, vec![]).unwrap()
    }

    #[test]
    fn snr_picks_best_rate_with_low_index_ties() {
        let r = RateMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(associate_snr(&r).as_slice(), &[0, 1, 0]);
    }

    #[test]
    fn greedy_one_each_when_nearest_distinct() {
        let t = topo(vec![Point::new(5.0, 5.0), Point::new(25.0, 5.0)], vec![Point::new(24.0, 5.0), Point::new(6.0, 5.0)]);
        let r = RateMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(associate_greedy(&t, &r).as_slice(), &[1, 0]);
    }

    #[test]
    fn greedy_round_robin_when_both_nearest_first_ap() {
        let t = topo(vec![Point::new(5.0, 5.0), Point::new(25.0, 5.0)], vec![Point::new(8.0, 5.0), Point::new(6.0, 5.0)]);
        let r = RateMatrix::from_rows(&[vec![2.0, 1.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(associate_greedy(&t, &r).as_slice(), &[1, 0]);
        // unreachable second AP: the leftover client stays on the first
        let r = RateMatrix::from_rows(&[vec![2.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(associate_greedy(&t, &r).as_slice(), &[0, 0]);
    }

    #[test]
    fn greedy_more_aps_than_clients() {
        let aps = vec![Point::new(5.0, 5.0), Point::new(15.0, 5.0), Point::new(25.0, 5.0)];
        let t = topo(aps, vec![Point::new(25.0, 6.0), Point::new(24.0, 6.0)]);
        let r = RateMatrix::from_rows(&[vec![1.0; 3], vec![1.0; 3]]).unwrap();
        let x = associate_greedy(&t, &r);
        let mut used = x.as_slice().to_vec();
        used.sort();
        assert_eq!(used, vec![0, 1]);
    }

    #[test]
    fn minmax_balances_symmetric_instance() {
        let r = RateMatrix::from_rows(&vec![vec![1e9; 3]; 3]).unwrap();
        let x = associate_minmax_load(&r, None);
        assert_eq!(x.loads(3), vec![1, 1, 1]);
    }

    #[test]
    fn minmax_faster_ap_absorbs_more() {
        let r = RateMatrix::from_rows(&vec![vec![2e9, 1e9]; 6]).unwrap();
        let x = associate_minmax_load(&r, None);
        assert_eq!(x.loads(2), vec![4, 2]);
    }
}
