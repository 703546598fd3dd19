//! Random-waypoint clients re-associated at every snapshot.
//!
//! Run with `cargo run --release --example mobility -- [seed]`.

use mmwave_assoc::experiment::{generate, solve_policy, ExperimentConfig, Policy};
use mmwave_assoc::metrics::{served_throughput, throughput};

fn main() -> mmwave_assoc::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = ExperimentConfig::preset("mobility-9ap")?;
    let snapshots = generate(&cfg, seed)?;

    println!("snapshot  client0_pos      snr-wf_Gb/s  proposed_Gb/s  handovers");
    let mut prev: Option<Vec<usize>> = None;
    for inst in &snapshots {
        let demand = inst.demand.as_deref().expect("finite demand");
        let mut agg = Vec::new();
        let mut assoc = Vec::new();
        for policy in [Policy::SnrWf, Policy::ProposedSawf] {
            let out = solve_policy(policy, inst, &cfg.solver)?;
            let raw = throughput(&out.association, &out.airtime, &inst.rates, &inst.frames);
            agg.push(served_throughput(&raw, demand).iter().sum::<f64>() / 1e9);
            assoc = out.association.as_slice().to_vec();
        }
        let handovers = prev.map_or(0, |p| p.iter().zip(&assoc).filter(|(a, b)| a != b).count());
        let c0 = inst.topology.clients[0];
        println!("{:>8}  ({:>5.2}, {:>5.2}) {:>13.3} {:>14.3} {:>10}", inst.snapshot, c0.x, c0.y, agg[0], agg[1], handovers);
        prev = Some(assoc);
    }
    Ok(())
}
