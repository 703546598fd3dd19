//! Geometry to PHY-rate mapping: free-space loss, boresight antenna gain,
//! wall attenuation, and an SNR-threshold MCS table.
//!
//! Links are treated as interference-free point-to-point channels, so a rate
//! depends only on the geometry of its own client/AP pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Matrix, RateMatrix};
use crate::scenario::Topology;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise density at 290 K, dBm/Hz.
const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

/// 802.11ad-style OFDM rates used by the default synthetic MCS table.
const DEFAULT_RATES: [f64; 8] = [693e6, 1386e6, 2079e6, 2772e6, 3465e6, 4158e6, 5197.5e6, 6756e6];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Straight wall segment with a fixed penetration loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: Point,
    pub b: Point,
    pub attenuation_db: f64,
}

impl Wall {
    pub fn new(a: Point, b: Point, attenuation_db: f64) -> Result<Self> {
        let w = Self { a, b, attenuation_db };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.attenuation_db >= 0.0) {
            return Err(Error::Invalid(format!("wall attenuation must be >= 0, got {}", self.attenuation_db)));
        }
        if self.a == self.b {
            return Err(Error::Invalid("wall endpoints must be distinct".into()));
        }
        Ok(())
    }

    /// Strict crossing test: the segments must intersect at a single point
    /// interior to both. Touching an endpoint or running collinear does not count.
    pub fn blocks(&self, p: &Point, q: &Point) -> bool {
        let d1 = orient(&self.a, &self.b, p);
        let d2 = orient(&self.a, &self.b, q);
        let d3 = orient(p, q, &self.a);
        let d4 = orient(p, q, &self.b);
        d1 * d2 < 0.0 && d3 * d4 < 0.0
    }
}

fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// One MCS tier: the lowest SNR at which `rate_bps` is sustainable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    pub min_snr_db: f64,
    pub rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub tx_power_dbm: f64,
    /// Boresight gain of each endpoint's antenna.
    pub antenna_gain_dbi: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// Floor applied to the path-loss distance argument.
    pub min_distance_m: f64,
    /// Strictly increasing in both threshold and rate.
    pub mcs: Vec<McsEntry>,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            tx_power_dbm: 0.0,
            antenna_gain_dbi: 15.0,
            carrier_hz: 60.48e9,
            bandwidth_hz: 2.16e9,
            noise_figure_db: 10.0,
            min_distance_m: 0.1,
            mcs: synthetic_mcs_table(2.0, 3.0),
        }
    }
}

/// Eight-tier table spanning 693 Mb/s to 6.756 Gb/s with thresholds
/// `base_db, base_db + spacing_db, ...`. Synthetic, not the standard's
/// sensitivity table.
pub fn synthetic_mcs_table(base_db: f64, spacing_db: f64) -> Vec<McsEntry> {
    DEFAULT_RATES
        .iter()
        .enumerate()
        .map(|(k, &rate_bps)| McsEntry { min_snr_db: base_db + spacing_db * k as f64, rate_bps })
        .collect()
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mcs.is_empty() {
            return Err(Error::Invalid("MCS table is empty".into()));
        }
        for w in self.mcs.windows(2) {
            if !(w[1].min_snr_db > w[0].min_snr_db && w[1].rate_bps > w[0].rate_bps) {
                return Err(Error::Invalid("MCS table must be strictly increasing in SNR and rate".into()));
            }
        }
        if !(self.mcs[0].rate_bps > 0.0) {
            return Err(Error::Invalid("MCS rates must be positive".into()));
        }
        if !(self.carrier_hz > 0.0 && self.bandwidth_hz > 0.0 && self.min_distance_m > 0.0) {
            return Err(Error::Invalid("carrier, bandwidth, and minimum distance must be positive".into()));
        }
        Ok(())
    }

    /// Receiver noise floor from bandwidth and noise figure, dBm.
    pub fn noise_floor_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_HZ + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }

    /// Largest distance at which the lowest MCS tier is still reachable in
    /// free space without walls.
    pub fn coverage_radius(&self) -> f64 {
        let margin = self.tx_power_dbm + 2.0 * self.antenna_gain_dbi - self.noise_floor_dbm() - self.mcs[0].min_snr_db;
        SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * self.carrier_hz) * 10f64.powf(margin / 20.0)
    }
}

/// Free-space path loss `20 log10(4 pi d f / c)`, dB.
pub fn free_space_path_loss_db(distance_m: f64, carrier_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * distance_m * carrier_hz / SPEED_OF_LIGHT).log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub snr_db: f64,
    /// Set when the endpoints were closer than the minimum distance.
    pub distance_clamped: bool,
}

pub fn link_snr(client: &Point, ap: &Point, walls: &[Wall], radio: &RadioConfig) -> LinkBudget {
    let raw = client.distance(ap);
    let d = raw.max(radio.min_distance_m);
    let wall_loss: f64 = walls.iter().filter(|w| w.blocks(client, ap)).map(|w| w.attenuation_db).sum();
    let snr_db = radio.tx_power_dbm + 2.0 * radio.antenna_gain_dbi
        - free_space_path_loss_db(d, radio.carrier_hz)
        - wall_loss
        - radio.noise_floor_dbm();
    LinkBudget { snr_db, distance_clamped: raw < radio.min_distance_m }
}

/// Highest rate whose threshold is at or below `snr_db`; zero when the link
/// is below every threshold.
pub fn snr_to_rate(snr_db: f64, radio: &RadioConfig) -> f64 {
    radio.mcs.iter().rev().find(|e| e.min_snr_db <= snr_db).map_or(0.0, |e| e.rate_bps)
}

/// Rate matrix of a topology plus per-link diagnostics.
#[derive(Debug, Clone)]
pub struct RateMap {
    pub rates: RateMatrix,
    pub snr_db: Matrix,
    /// `(client, ap)` pairs whose distance was clamped.
    pub clamped: Vec<(usize, usize)>,
}

pub fn rate_matrix(topology: &Topology, radio: &RadioConfig) -> Result<RateMap> {
    radio.validate()?;
    let (n, m) = (topology.clients.len(), topology.aps.len());
    let mut rates = Matrix::zeros(n, m);
    let mut snr = Matrix::zeros(n, m);
    let mut clamped = Vec::new();
    for (i, c) in topology.clients.iter().enumerate() {
        for (j, a) in topology.aps.iter().enumerate() {
            let link = link_snr(c, a, &topology.walls, radio);
            if link.distance_clamped {
                clamped.push((i, j));
            }
            snr.set(i, j, link.snr_db);
            rates.set(i, j, snr_to_rate(link.snr_db, radio));
        }
    }
    Ok(RateMap { rates: RateMatrix::new(rates)?, snr_db: snr, clamped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fspl_one_metre_at_60ghz() {
        // 20*log10(4*pi*60.48e9/299792458) evaluated offline
        assert!((free_space_path_loss_db(1.0, 60.48e9) - 68.080_018_9).abs() < 1e-6);
    }

    #[test]
    fn doubling_distance_costs_6db() {
        let r = RadioConfig::default();
        let ap = Point::new(0.0, 0.0);
        let a = link_snr(&Point::new(3.0, 0.0), &ap, &[], &r).snr_db;
        let b = link_snr(&Point::new(6.0, 0.0), &ap, &[], &r).snr_db;
        assert!((a - b - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!((a - b - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn wall_attenuation_is_additive() {
        let r = RadioConfig::default();
        let (c, ap) = (Point::new(0.0, 0.0), Point::new(10.0, 0.0));
        let wall = Wall::new(Point::new(5.0, -1.0), Point::new(5.0, 1.0), 30.0).unwrap();
        let free = link_snr(&c, &ap, &[], &r).snr_db;
        let blocked = link_snr(&c, &ap, &[wall], &r).snr_db;
        assert!((free - blocked - 30.0).abs() < 1e-12);
    }

    #[test]
    fn touching_a_wall_endpoint_does_not_cross() {
        let wall = Wall::new(Point::new(5.0, 0.0), Point::new(5.0, 4.0), 10.0).unwrap();
        assert!(!wall.blocks(&Point::new(0.0, 0.0), &Point::new(10.0, 0.0)));
        assert!(wall.blocks(&Point::new(0.0, 1.0), &Point::new(10.0, 1.0)));
        // collinear
        assert!(!wall.blocks(&Point::new(5.0, -2.0), &Point::new(5.0, 10.0)));
        assert!(Wall::new(Point::new(1.0, 1.0), Point::new(1.0, 1.0), 1.0).is_err());
        assert!(Wall::new(Point::new(1.0, 1.0), Point::new(2.0, 1.0), -1.0).is_err());
    }

    #[test]
    fn coincident_positions_are_clamped() {
        let r = RadioConfig::default();
        let p = Point::new(1.0, 1.0);
        let l = link_snr(&p, &p, &[], &r);
        assert!(l.distance_clamped);
        let at_min = link_snr(&Point::new(1.1, 1.0), &p, &[], &r);
        assert!((l.snr_db - at_min.snr_db).abs() < 1e-9);
    }

    #[test]
    fn mcs_lookup_boundaries() {
        let r = RadioConfig::default();
        assert_eq!(snr_to_rate(-5.0, &r), 0.0);
        assert_eq!(snr_to_rate(1.999, &r), 0.0);
        assert_eq!(snr_to_rate(2.0, &r), 693e6);
        assert_eq!(snr_to_rate(5.0, &r), 1386e6);
        assert_eq!(snr_to_rate(23.0, &r), 6.756e9);
        assert_eq!(snr_to_rate(80.0, &r), 6.756e9);
    }

    #[test]
    fn default_table_valid_and_bounded() {
        let r = RadioConfig::default();
        r.validate().unwrap();
        assert_eq!(r.mcs.len(), 8);
        assert_eq!(r.mcs.first().unwrap().rate_bps, 693e6);
        assert_eq!(r.mcs.last().unwrap().rate_bps, 6.756e9);
        let mut bad = r.clone();
        bad.mcs.swap(0, 1);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn rate_non_increasing_in_distance() {
        let r = RadioConfig::default();
        let ap = Point::new(0.0, 0.0);
        let mut last = f64::INFINITY;
        for k in 1..400 {
            let d = 0.1 * k as f64;
            let rate = snr_to_rate(link_snr(&Point::new(d, 0.0), &ap, &[], &r).snr_db, &r);
            assert!(rate <= last);
            last = rate;
        }
    }
}
