use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ClientRow;
use crate::error::{Error, Result};
use crate::metrics::display_utility;

/// Reads a `results.csv` stream.
pub fn read_results<R: Read>(r: R) -> Result<Vec<ClientRow>> {
    csv::Reader::from_reader(r).deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Percentile bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn excludes_zero(&self) -> bool {
        self.lo > 0.0 || self.hi < 0.0
    }
}

/// Summary of paired `candidate - baseline` differences.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedStat {
    pub deltas: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub ci95: Interval,
}

impl PairedStat {
    /// `resamples` bootstrap draws of the mean, seeded by `seed`.
    pub fn from_deltas(deltas: Vec<f64>, resamples: usize, seed: u64) -> Self {
        let n = deltas.len();
        let mean = deltas.iter().sum::<f64>() / n as f64;
        let mut sorted = deltas.clone();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut means: Vec<f64> = (0..resamples.max(1))
            .map(|_| (0..n).map(|_| deltas[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
            .collect();
        means.sort_by(f64::total_cmp);
        let b = means.len();
        let lo = means[((0.025 * b as f64).floor() as usize).min(b - 1)];
        let hi = means[((0.975 * b as f64).ceil() as usize).clamp(1, b) - 1];
        Self { deltas, mean, median, ci95: Interval { lo, hi } }
    }
}

/// Paired comparison of two policies in one results file.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: String,
    pub candidate: String,
    /// Paired units, one per `(run_id, seed)`.
    pub pairs: usize,
    pub aggregate_bps: PairedStat,
    pub utility_nats: PairedStat,
    /// Fraction of client rows marked satisfied, over the paired cells.
    pub baseline_demand_met: f64,
    pub candidate_demand_met: f64,
}

#[derive(Default, Clone, Copy)]
struct Cell {
    aggregate: f64,
    utility: f64,
    satisfied: usize,
    clients: usize,
}

/// Per-seed paired deltas between two policy labels.
///
/// Snapshots of a mobility run are averaged within each seed before pairing.
/// Seeds present for only one label are skipped.
pub fn compare(rows: &[ClientRow], baseline: &str, candidate: &str, resamples: usize, seed: u64) -> Result<Comparison> {
    let per_label = |label: &str| -> Result<BTreeMap<(String, u64), Cell>> {
        let mut cells: BTreeMap<(String, u64, usize), Vec<&ClientRow>> = BTreeMap::new();
        for r in rows.iter().filter(|r| r.policy == label) {
            cells.entry((r.run_id.clone(), r.seed, r.snapshot)).or_default().push(r);
        }
        if cells.is_empty() {
            return Err(Error::Config { line: None, message: format!("policy '{label}' not found in results") });
        }
        let mut seeds: BTreeMap<(String, u64), (Cell, usize)> = BTreeMap::new();
        for ((run, s, _), clients) in cells {
            let tput: Vec<f64> = clients.iter().map(|r| r.throughput_bps).collect();
            let e = seeds.entry((run, s)).or_default();
            e.0.aggregate += tput.iter().sum::<f64>();
            e.0.utility += display_utility(&tput);
            e.0.satisfied += clients.iter().filter(|r| r.satisfied == 1).count();
            e.0.clients += clients.len();
            e.1 += 1;
        }
        Ok(seeds
            .into_iter()
            .map(|(k, (mut c, snaps))| {
                c.aggregate /= snaps as f64;
                c.utility /= snaps as f64;
                (k, c)
            })
            .collect())
    };
    let base = per_label(baseline)?;
    let cand = per_label(candidate)?;
    let paired: Vec<(&Cell, &Cell)> = base.iter().filter_map(|(k, b)| cand.get(k).map(|c| (b, c))).collect();
    if paired.is_empty() {
        return Err(Error::Config {
            line: None,
            message: format!("policies '{baseline}' and '{candidate}' share no seeds"),
        });
    }
    let met = |cells: Vec<&Cell>| {
        let (s, n) = cells.iter().fold((0, 0), |(s, n), c| (s + c.satisfied, n + c.clients));
        s as f64 / n as f64
    };
    Ok(Comparison {
        baseline: baseline.to_string(),
        candidate: candidate.to_string(),
        pairs: paired.len(),
        aggregate_bps: PairedStat::from_deltas(paired.iter().map(|(b, c)| c.aggregate - b.aggregate).collect(), resamples, seed),
        utility_nats: PairedStat::from_deltas(paired.iter().map(|(b, c)| c.utility - b.utility).collect(), resamples, seed),
        baseline_demand_met: met(paired.iter().map(|p| p.0).collect()),
        candidate_demand_met: met(paired.iter().map(|p| p.1).collect()),
    })
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} vs {} over {} paired seeds", self.candidate, self.baseline, self.pairs)?;
        writeln!(f, "metric,mean_delta,median_delta,ci95_lo,ci95_hi")?;
        for (name, s) in [("aggregate_bps", &self.aggregate_bps), ("utility_nats", &self.utility_nats)] {
            writeln!(f, "{name},{},{},{},{}", s.mean, s.median, s.ci95.lo, s.ci95.hi)?;
        }
        writeln!(f, "demand_met,{},{}", self.baseline, self.candidate)?;
        write!(f, "fraction,{},{}", self.baseline_demand_met, self.candidate_demand_met)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, policy: &str, client: usize, tput: f64, satisfied: u8) -> ClientRow {
        ClientRow {
            run_id: "t".into(),
            seed,
            snapshot: 0,
            policy: policy.into(),
            client_id: client,
            ap_id: 0,
            rate_bps: 1e9,
            airtime_frac: 0.5,
            throughput_bps: tput,
            demand_bps: Some(1e8),
            satisfied,
        }
    }

    #[test]
    fn self_comparison_is_zero() {
        let rows: Vec<_> = (0..5).flat_map(|s| (0..3).map(move |i| row(s, "a", i, 1e8 * (s as usize + i + 1) as f64, 1))).collect();
        let c = compare(&rows, "a", "a", 500, 0).unwrap();
        assert_eq!(c.pairs, 5);
        assert!(c.aggregate_bps.deltas.iter().all(|&d| d == 0.0));
        assert_eq!(c.aggregate_bps.ci95, Interval { lo: 0.0, hi: 0.0 });
        assert_eq!(c.utility_nats.mean, 0.0);
        assert_eq!(c.baseline_demand_met, c.candidate_demand_met);
    }

    #[test]
    fn constant_shift_is_detected() {
        let mut rows = Vec::new();
        for s in 0..10 {
            rows.push(row(s, "a", 0, 1e8 + s as f64, 0));
            rows.push(row(s, "b", 0, 2e8 + s as f64, 1));
        }
        let c = compare(&rows, "a", "b", 1000, 3).unwrap();
        assert!((c.aggregate_bps.mean - 1e8).abs() < 1e-6);
        assert!(c.aggregate_bps.ci95.excludes_zero());
        assert!((c.utility_nats.median - 2f64.ln()).abs() < 1e-6);
        assert_eq!((c.baseline_demand_met, c.candidate_demand_met), (0.0, 1.0));
    }

    #[test]
    fn missing_label_is_a_config_error() {
        let rows = vec![row(0, "a", 0, 1.0, 0)];
        assert!(matches!(compare(&rows, "a", "zzz", 10, 0), Err(Error::Config { .. })));
    }

    #[test]
    fn csv_round_trip_keeps_empty_demand() {
        let mut r = row(1, "a", 0, 5.0, 0);
        r.demand_bps = None;
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.serialize(&r).unwrap();
        }
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("run_id,seed,snapshot,policy,client_id,ap_id,rate_bps,airtime_frac,throughput_bps,demand_bps,satisfied\n"));
        assert_eq!(read_results(&buf[..]).unwrap(), vec![r]);
    }
}
