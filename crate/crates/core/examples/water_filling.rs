//! Max-min airtime sharing at a single AP and the bottleneck metric.
//!
//! Run with `cargo run --example water_filling`.

use mmwave_assoc::loadsolve::{bottlenecks, max_min_share, water_filling};
use mmwave_assoc::metrics::{throughput, uniform_frames};
use mmwave_assoc::model::{Association, FrameConfig, RateMatrix};

fn main() -> mmwave_assoc::Result<()> {
    // airtime needs that overflow one data interval
    let needs = [0.05, 0.2, 0.4, 0.6];
    let shares = max_min_share(&needs);
    println!("needs  {needs:?}\nshares {:?}\n", shares.iter().map(|s| (s * 1e4).round() / 1e4).collect::<Vec<_>>());

    // four clients on AP 0, one on AP 1
    let rates = RateMatrix::from_rows(&[
        vec![4.62e9, 1.1e9],
        vec![2.5e9, 0.0],
        vec![1.54e9, 0.69e9],
        vec![3.85e9, 2.1e9],
        vec![0.0, 6.76e9],
    ])?;
    let frames = uniform_frames(2, FrameConfig::default());
    let demand = [1.0e9, 0.8e9, 0.9e9, 1.2e9, 0.5e9];
    let x = Association::new(vec![0, 0, 0, 0, 1], &rates)?;
    let t = water_filling(&x, &rates, &frames, &demand)?;
    let s = throughput(&x, &t, &rates, &frames);

    println!("client  ap  airtime  served/demand");
    for i in 0..rates.n_clients() {
        let j = x.ap_of(i);
        println!("{i:>6} {j:>3} {:>8.4} {:>8.3}/{:.3} Gb/s", t.get(i, j), s[i] / 1e9, demand[i] / 1e9);
    }

    let b = bottlenecks(&x, &t, &rates, &frames, &demand);
    for j in 0..rates.n_aps() {
        println!(
            "AP {j}: deficit {:.3} Gb/s, slack {:.3} Gb/s, B = {:+.3} Gb/s{}",
            b.load_deficit[j] / 1e9,
            b.time_slack[j] / 1e9,
            b.value[j] / 1e9,
            if b.is_bottleneck(j) { " (bottleneck)" } else { "" }
        );
    }
    Ok(())
}
