//! Link budget and MCS rates for a small room with one wall.
//!
//! Run with `cargo run --example rate_matrix`.

use mmwave_assoc::phy::{link_snr, rate_matrix, Point, RadioConfig, Wall};
use mmwave_assoc::scenario::{grid_aps, Topology};

fn main() -> mmwave_assoc::Result<()> {
    let radio = RadioConfig::default();
    let aps = grid_aps(24.0, 20.0, 2, 2)?;
    let clients = vec![Point::new(3.0, 4.0), Point::new(12.0, 10.0), Point::new(20.0, 17.0), Point::new(23.5, 1.0)];
    // a concrete partition down the middle of the room
    let walls = vec![Wall::new(Point::new(12.5, 0.0), Point::new(12.5, 12.0), 20.0)?];
    let topo = Topology::new(24.0, 20.0, aps.clone(), clients.clone(), walls.clone())?;

    println!("coverage radius without walls: {:.1} m", radio.coverage_radius());
    println!("noise floor: {:.1} dBm\n", radio.noise_floor_dbm());

    let map = rate_matrix(&topo, &radio)?;
    println!("client  ap  snr_db  rate_gbps");
    for (i, c) in clients.iter().enumerate() {
        for (j, a) in aps.iter().enumerate() {
            let snr = link_snr(c, a, &walls, &radio).snr_db;
            println!("{i:>6} {j:>3} {snr:>7.1} {:>10.3}", map.rates.get(i, j) / 1e9);
        }
    }
    Ok(())
}
