//! Finite demands: annealing over associations with water-filled airtime.
//!
//! Run with `cargo run --example finite_load -- [seed] [restarts]`.
//! Writes the annealing trace to `sa_trace.csv` in the working directory.

use std::fs::File;

use mmwave_assoc::baselines::associate_snr;
use mmwave_assoc::experiment::{generate, ExperimentConfig};
use mmwave_assoc::loadsolve::{all_demands_met, finite_utility, solve_finite, water_filling, write_trace, SaParams};
use mmwave_assoc::satsolve::SaturationOptions;

fn main() -> mmwave_assoc::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let restarts = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = ExperimentConfig::preset("finite-9ap")?;
    let inst = generate(&cfg, seed)?.remove(0);
    let (rates, frames) = (&inst.rates, &inst.frames);
    let demand = inst.demand.as_deref().expect("finite-9ap has finite demand");

    let snr = associate_snr(rates);
    let t_snr = water_filling(&snr, rates, frames, demand)?;
    println!(
        "snr + water filling: utility {:.4}, all demands met: {}",
        finite_utility(&snr, &t_snr, rates, frames)?,
        all_demands_met(&snr, &t_snr, rates, frames, demand)
    );

    let params = SaParams { seed, restarts, ..SaParams::default() };
    let out = solve_finite(rates, frames, demand, &SaturationOptions { seed, ..Default::default() }, &params)?;
    println!(
        "annealing:           utility {:.4}, all demands met: {} ({} levels, {} perturbations, {:.1} ms)",
        out.report.utility,
        out.demands_met,
        out.levels,
        out.perturbations,
        out.report.wall_time * 1e3
    );
    let moved = (0..rates.n_clients()).filter(|&i| snr.ap_of(i) != out.association.ap_of(i)).count();
    println!("{moved} of {} clients leave their strongest AP", rates.n_clients());

    write_trace(&out.trace, File::create("sa_trace.csv")?)?;
    println!("trace of the returned run written to sa_trace.csv");
    Ok(())
}
