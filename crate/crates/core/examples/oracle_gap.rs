//! Exhaustive search as ground truth for both solvers.
//!
//! Run with `cargo run --release --example oracle_gap -- [seeds]`.
//! `MMWAVE_ORACLE_LIMIT` caps the number of enumerated associations.

use mmwave_assoc::experiment::{generate, ExperimentConfig};
use mmwave_assoc::loadsolve::{solve_finite, SaParams};
use mmwave_assoc::oracle::{exhaustive_finite, exhaustive_saturation, search_limit_from_env, search_space};
use mmwave_assoc::satsolve::{solve_saturation, SaturationOptions};

fn main() -> mmwave_assoc::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let limit = search_limit_from_env();
    let sat = ExperimentConfig::preset("office-4ap")?;
    let fin = ExperimentConfig::preset("finite-4ap")?;

    println!("seed  space  sat_gap_%  finite_gap_%");
    for seed in 1..=seeds {
        let inst = generate(&sat, seed)?.remove(0);
        let opts = SaturationOptions { seed, ..Default::default() };
        let s = solve_saturation(&inst.rates, &inst.frames, &opts)?;
        let o = exhaustive_saturation(&inst.rates, &inst.frames, limit)?;
        let sat_gap = 100.0 * (o.utility - s.report.utility) / o.utility.abs();

        let inst = generate(&fin, seed)?.remove(0);
        let d = inst.demand.as_deref().expect("finite demand");
        let f = solve_finite(&inst.rates, &inst.frames, d, &opts, &SaParams { seed, ..SaParams::default() })?;
        let o = exhaustive_finite(&inst.rates, &inst.frames, d, limit)?;
        let fin_gap = 100.0 * (o.utility - f.report.utility) / o.utility.abs();
        println!("{seed:>4} {:>6.0} {sat_gap:>10.4} {fin_gap:>13.4}", search_space(&inst.rates));
    }
    Ok(())
}
