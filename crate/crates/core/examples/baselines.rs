//! Every policy on one finite-load instance.
//!
//! Run with `cargo run --example baselines -- [seed]`.

use mmwave_assoc::experiment::{cell_rows, generate, solve_policy, ExperimentConfig, Policy};

fn main() -> mmwave_assoc::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let cfg = ExperimentConfig::preset("finite-4ap")?;
    let inst = generate(&cfg, seed)?.remove(0);

    println!("{:<14}{:>12}{:>16}{:>12}", "policy", "utility", "aggregate", "satisfied");
    for policy in Policy::ALL {
        let out = solve_policy(policy, &inst, &cfg.solver)?;
        let (rows, summary) = cell_rows(&cfg.name, &inst, &out, false);
        let met = rows.iter().filter(|r| r.satisfied == 1).count();
        println!(
            "{:<14}{:>12.4}{:>11.3} Gb/s{:>9}/{}",
            policy.label(),
            summary.utility_nats,
            summary.aggregate_bps / 1e9,
            met,
            rows.len()
        );
    }
    Ok(())
}
