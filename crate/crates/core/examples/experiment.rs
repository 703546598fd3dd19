//! A reduced preset run written to CSV, then a paired comparison.
//!
//! Run with `cargo run --release --example experiment -- [out_dir]`.

use std::path::PathBuf;

use mmwave_assoc::experiment::{self, compare, ExperimentConfig, Policy};

fn main() -> mmwave_assoc::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("mmwave-experiment"));
    let mut cfg = ExperimentConfig::preset("clustered-9ap")?;
    cfg.seeds = (1..=10).collect();
    cfg.policies = vec![Policy::SnrEa, Policy::GreedyEa, Policy::ProposedSat];
    cfg.timing = false;

    let out = experiment::run(&cfg, 0)?;
    let files = experiment::write_outputs(&out, &dir, false)?;
    println!("{} and {}", files.results.display(), files.summary.display());

    for baseline in ["snr-ea", "greedy-ea"] {
        println!("\n{}", compare(&out.results, baseline, "proposed-sat", 10_000, 0)?);
    }
    Ok(())
}
