//! Backlogged clients: relaxed ascent plus rounding against SNR association.
//!
//! Run with `cargo run --example saturation -- [seed]`.

use mmwave_assoc::baselines::associate_snr;
use mmwave_assoc::experiment::{generate, ExperimentConfig};
use mmwave_assoc::metrics::{equal_airtime, equal_airtime_utility, throughput};
use mmwave_assoc::satsolve::{round_ml, solve_saturation, SaturationOptions};

fn main() -> mmwave_assoc::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let cfg = ExperimentConfig::preset("office-4ap")?;
    let inst = generate(&cfg, seed)?.remove(0);
    let (rates, frames) = (&inst.rates, &inst.frames);

    let sol = solve_saturation(rates, frames, &SaturationOptions { seed, ..Default::default() })?;
    println!(
        "relaxed optimum {:.4} nats after {} iterations (converged: {})",
        sol.relaxed.utility, sol.relaxed.iterations, sol.relaxed.converged
    );

    let snr = associate_snr(rates);
    let ml = round_ml(&sol.relaxed.x, rates);
    println!("{:<22}{:>12}{:>14}", "association", "utility", "aggregate");
    for (name, x) in [("snr", &snr), ("max-likelihood round", &ml), ("iterative round", &sol.association)] {
        let u = equal_airtime_utility(x, rates, frames);
        let agg: f64 = throughput(x, &equal_airtime(x, rates.n_aps()), rates, frames).iter().sum();
        println!("{name:<22}{u:>12.4}{:>10.3} Gb/s", agg / 1e9);
    }

    println!("\nclient  snr_ap  proposed_ap  x_relaxed");
    for i in 0..rates.n_clients() {
        let row: Vec<String> = (0..rates.n_aps()).map(|j| format!("{:.2}", sol.relaxed.x.get(i, j))).collect();
        println!("{i:>6} {:>7} {:>12}  [{}]", snr.ap_of(i), sol.association.ap_of(i), row.join(", "));
    }
    Ok(())
}
