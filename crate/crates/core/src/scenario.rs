//! Deployment generators: grid AP layouts, density-driven and uniform client
//! placement, random-waypoint mobility, and a CSV topology format.
//!
//! Every generator is a deterministic function of its configuration and seed.

use std::io::{Read, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::{Point, Wall};

/// Axis-aligned rectangle, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        if !(x_max > x_min && y_max > y_min) {
            return Err(Error::Invalid(format!("degenerate rectangle [{x_min},{x_max}]x[{y_min},{y_max}]")));
        }
        Ok(Self { x_min, y_min, x_max, y_max })
    }

    /// `[0, width] x [0, height]`.
    pub fn area(width: f64, height: f64) -> Result<Self> {
        Self::new(0.0, 0.0, width, height)
    }

    pub fn contains(&self, p: &Point) -> bool {
        (self.x_min..=self.x_max).contains(&p.x) && (self.y_min..=self.y_max).contains(&p.y)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::new(rng.gen_range(self.x_min..=self.x_max), rng.gen_range(self.y_min..=self.y_max))
    }
}

/// Geometry of one deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub width: f64,
    pub height: f64,
    pub aps: Vec<Point>,
    pub clients: Vec<Point>,
    pub walls: Vec<Wall>,
}

impl Topology {
    pub fn new(width: f64, height: f64, aps: Vec<Point>, clients: Vec<Point>, walls: Vec<Wall>) -> Result<Self> {
        let t = Self { width, height, aps, clients, walls };
        t.validate()?;
        Ok(t)
    }

    pub fn bounds(&self) -> Rect {
        Rect { x_min: 0.0, y_min: 0.0, x_max: self.width, y_max: self.height }
    }

    pub fn validate(&self) -> Result<()> {
        if self.aps.is_empty() || self.clients.is_empty() {
            return Err(Error::Invalid("topology needs at least one AP and one client".into()));
        }
        let area = Rect::area(self.width, self.height)?;
        if let Some(i) = self.aps.iter().position(|p| !area.contains(p)) {
            return Err(Error::Invalid(format!("AP {i} lies outside the area")));
        }
        if let Some(i) = self.clients.iter().position(|p| !area.contains(p)) {
            return Err(Error::Invalid(format!("client {i} lies outside the area")));
        }
        self.walls.iter().try_for_each(Wall::validate)
    }

    /// Same APs and walls with a different client set.
    pub fn with_clients(&self, clients: Vec<Point>) -> Self {
        Self { clients, ..self.clone() }
    }

    /// Writes the topology as CSV with columns
    /// `kind,id,x,y,x2,y2,attenuation_db`; kind is one of `area`, `ap`,
    /// `client`, `wall`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.serialize(TopologyRow::plain("area", 0, self.width, self.height))?;
        for (i, p) in self.aps.iter().enumerate() {
            out.serialize(TopologyRow::plain("ap", i, p.x, p.y))?;
        }
        for (i, p) in self.clients.iter().enumerate() {
            out.serialize(TopologyRow::plain("client", i, p.x, p.y))?;
        }
        for (i, wall) in self.walls.iter().enumerate() {
            out.serialize(TopologyRow {
                kind: "wall".into(),
                id: i,
                x: wall.a.x,
                y: wall.a.y,
                x2: Some(wall.b.x),
                y2: Some(wall.b.y),
                attenuation_db: Some(wall.attenuation_db),
            })?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let (mut area, mut aps, mut clients, mut walls) = (None, Vec::new(), Vec::new(), Vec::new());
        for row in rdr.deserialize::<TopologyRow>() {
            let row = row?;
            let p = Point::new(row.x, row.y);
            match row.kind.as_str() {
                "area" => area = Some((row.x, row.y)),
                "ap" => aps.push((row.id, p)),
                "client" => clients.push((row.id, p)),
                "wall" => {
                    let (Some(x2), Some(y2), Some(att)) = (row.x2, row.y2, row.attenuation_db) else {
                        return Err(Error::Invalid(format!("wall {} is missing x2/y2/attenuation_db", row.id)));
                    };
                    walls.push((row.id, Wall::new(p, Point::new(x2, y2), att)?));
                }
                other => return Err(Error::Invalid(format!("unknown topology row kind '{other}'"))),
            }
        }
        let (width, height) = area.ok_or_else(|| Error::Invalid("topology CSV has no area row".into()))?;
        aps.sort_by_key(|(i, _)| *i);
        clients.sort_by_key(|(i, _)| *i);
        walls.sort_by_key(|(i, _)| *i);
        let strip = |v: Vec<(usize, Point)>| v.into_iter().map(|(_, p)| p).collect::<Vec<_>>();
        Topology::new(width, height, strip(aps), strip(clients), walls.into_iter().map(|(_, w)| w).collect())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TopologyRow {
    kind: String,
    id: usize,
    x: f64,
    y: f64,
    x2: Option<f64>,
    y2: Option<f64>,
    attenuation_db: Option<f64>,
}

impl TopologyRow {
    fn plain(kind: &str, id: usize, x: f64, y: f64) -> Self {
        Self { kind: kind.into(), id, x, y, x2: None, y2: None, attenuation_db: None }
    }
}

/// Evenly spaced `rows x cols` grid with half-cell margins, row-major from
/// the lowest y.
pub fn grid_aps(width: f64, height: f64, rows: usize, cols: usize) -> Result<Vec<Point>> {
    if rows == 0 || cols == 0 {
        return Err(Error::Invalid("grid needs at least one row and one column".into()));
    }
    let (dx, dy) = (width / cols as f64, height / rows as f64);
    Ok((0..rows)
        .flat_map(|r| (0..cols).map(move |c| Point::new(dx * (c as f64 + 0.5), dy * (r as f64 + 0.5))))
        .collect())
}

/// Axis-aligned Gaussian bump of the placement density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub center: Point,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub weight: f64,
}

/// Client placement density: Gaussian mixture truncated to the area plus a
/// uniform floor so that no position has zero probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementDensity {
    pub components: Vec<GaussianComponent>,
    /// Mass of the uniform component.
    #[serde(default = "default_floor")]
    pub floor_weight: f64,
}

fn default_floor() -> f64 {
    0.05
}

impl PlacementDensity {
    /// Single bump centred at `(15, 13)` for the 24 x 20 m office.
    pub fn office_default() -> Self {
        Self {
            components: vec![GaussianComponent {
                center: Point::new(15.0, 13.0),
                sigma_x: 4.0,
                sigma_y: 3.0,
                weight: 0.95,
            }],
            floor_weight: 0.05,
        }
    }

    pub fn uniform() -> Self {
        Self { components: Vec::new(), floor_weight: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.iter().any(|c| !(c.sigma_x > 0.0 && c.sigma_y > 0.0 && c.weight >= 0.0)) {
            return Err(Error::Invalid("density components need positive sigmas and non-negative weights".into()));
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum::<f64>() + self.floor_weight;
        if !(self.floor_weight >= 0.0 && total > 0.0) {
            return Err(Error::Invalid("density has no mass".into()));
        }
        Ok(())
    }
}

/// Draws `n` independent client positions from `density` restricted to `area`.
pub fn sample_clients_pmf<R: Rng + ?Sized>(
    density: &PlacementDensity,
    area: &Rect,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Point>> {
    density.validate()?;
    let total: f64 = density.components.iter().map(|c| c.weight).sum::<f64>() + density.floor_weight;
    let normals: Vec<(Normal<f64>, Normal<f64>)> = density
        .components
        .iter()
        .map(|c| {
            (
                Normal::new(c.center.x, c.sigma_x).expect("validated sigma"),
                Normal::new(c.center.y, c.sigma_y).expect("validated sigma"),
            )
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut u = rng.gen::<f64>() * total;
        let mut picked = None;
        for (k, c) in density.components.iter().enumerate() {
            if u < c.weight {
                picked = Some(k);
                break;
            }
            u -= c.weight;
        }
        let p = match picked {
            None => area.sample(rng),
            Some(k) => {
                let (nx, ny) = &normals[k];
                // rejection keeps the truncated shape; gives up on bumps far outside the area
                let mut p = None;
                for _ in 0..1000 {
                    let q = Point::new(nx.sample(rng), ny.sample(rng));
                    if area.contains(&q) {
                        p = Some(q);
                        break;
                    }
                }
                p.ok_or_else(|| Error::Invalid(format!("density component {k} has negligible mass inside the area")))?
            }
        };
        out.push(p);
    }
    Ok(out)
}

pub fn sample_clients_uniform<R: Rng + ?Sized>(area: &Rect, n: usize, rng: &mut R) -> Vec<Point> {
    (0..n).map(|_| area.sample(rng)).collect()
}

/// Random-waypoint parameters; all ranges are inclusive `(min, max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityParams {
    pub speed: (f64, f64),
    pub pause: (f64, f64),
    pub walk: (f64, f64),
    pub horizon: f64,
    pub snapshot_period: f64,
    pub bounds: Rect,
}

impl Default for MobilityParams {
    fn default() -> Self {
        Self {
            speed: (0.2, 2.2),
            pause: (1.0, 20.0),
            walk: (1.0, 5.0),
            horizon: 100.0,
            snapshot_period: 10.0,
            bounds: Rect { x_min: 7.0, y_min: 7.0, x_max: 23.0, y_max: 16.0 },
        }
    }
}

impl MobilityParams {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("speed", self.speed), ("pause", self.pause), ("walk", self.walk)] {
            if !(lo > 0.0 && lo <= hi) {
                return Err(Error::Invalid(format!("mobility {name} range must satisfy 0 < min <= max")));
            }
        }
        if !(self.horizon > 0.0 && self.snapshot_period > 0.0) {
            return Err(Error::Invalid("mobility horizon and snapshot period must be positive".into()));
        }
        Rect::new(self.bounds.x_min, self.bounds.y_min, self.bounds.x_max, self.bounds.y_max).map(|_| ())
    }

    /// Snapshot instants `period, 2 period, ...` up to the horizon.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let count = (self.horizon / self.snapshot_period + 1e-9).floor() as usize;
        (1..=count).map(|k| k as f64 * self.snapshot_period).collect()
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// Per-client random-waypoint trajectories sampled at every snapshot time.
///
/// Each client alternates a pause then a walk toward a uniform waypoint at a
/// uniform speed; a walk ends at its drawn duration or on arrival. Client
/// `i` uses its own random stream, so trajectories do not depend on `N`.
/// Returns one position list per snapshot.
pub fn random_waypoint(initial: &[Point], params: &MobilityParams, seed: u64) -> Result<Vec<Vec<Point>>> {
    params.validate()?;
    if let Some(i) = initial.iter().position(|p| !params.bounds.contains(p)) {
        return Err(Error::Invalid(format!("client {i} starts outside the movement box")));
    }
    let times = params.snapshot_times();
    let mut snapshots = vec![Vec::with_capacity(initial.len()); times.len()];
    for (i, start) in initial.iter().enumerate() {
        let mut rng = client_stream(seed, i);
        for (k, p) in trajectory(*start, params, &times, &mut rng).into_iter().enumerate() {
            snapshots[k].push(p);
        }
    }
    Ok(snapshots)
}

pub(crate) fn client_stream(seed: u64, client: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(client as u64 + 1);
    rng
}

fn trajectory(start: Point, params: &MobilityParams, times: &[f64], rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut out = Vec::with_capacity(times.len());
    let mut now = 0.0;
    let mut pos = start;
    let mut next = 0;
    while next < times.len() {
        let pause_end = now + draw(rng, params.pause);
        while next < times.len() && times[next] <= pause_end {
            out.push(pos);
            next += 1;
        }
        now = pause_end;
        if next == times.len() {
            break;
        }
        let walk_time = draw(rng, params.walk);
        let speed = draw(rng, params.speed);
        let target = params.bounds.sample(rng);
        let dist = pos.distance(&target);
        let travel = (dist / speed).min(walk_time);
        let (vx, vy) = if dist > 0.0 {
            (speed * (target.x - pos.x) / dist, speed * (target.y - pos.y) / dist)
        } else {
            (0.0, 0.0)
        };
        let walk_end = now + walk_time;
        let at = |t: f64| {
            let dt = (t - now).clamp(0.0, travel);
            clamp_to(&params.bounds, Point::new(pos.x + vx * dt, pos.y + vy * dt))
        };
        while next < times.len() && times[next] <= walk_end {
            out.push(at(times[next]));
            next += 1;
        }
        pos = at(walk_end);
        now = walk_end;
    }
    out
}

// guards against round-off pushing an endpoint a hair outside the box
fn clamp_to(b: &Rect, p: Point) -> Point {
    Point::new(p.x.clamp(b.x_min, b.x_max), p.y.clamp(b.y_min, b.y_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_two_by_two_office() {
        let g = grid_aps(24.0, 20.0, 2, 2).unwrap();
        assert_eq!(
            g,
            vec![Point::new(6.0, 5.0), Point::new(18.0, 5.0), Point::new(6.0, 15.0), Point::new(18.0, 15.0)]
        );
    }

    #[test]
    fn grid_three_by_three_has_ten_metre_pitch() {
        let g = grid_aps(30.0, 30.0, 3, 3).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], Point::new(5.0, 5.0));
        assert_eq!(g[4], Point::new(15.0, 15.0));
        assert_eq!(g[8], Point::new(25.0, 25.0));
        assert!((g[1].x - g[0].x - 10.0).abs() < 1e-12);
        assert!((g[3].y - g[0].y - 10.0).abs() < 1e-12);
    }

    #[test]
    fn grid_single_is_centre_and_zero_rejected() {
        assert_eq!(grid_aps(24.0, 20.0, 1, 1).unwrap(), vec![Point::new(12.0, 10.0)]);
        assert!(grid_aps(24.0, 20.0, 0, 2).is_err());
    }

    #[test]
    fn pmf_sampling_is_seeded() {
        let area = Rect::area(24.0, 20.0).unwrap();
        let d = PlacementDensity::office_default();
        let a = sample_clients_pmf(&d, &area, 50, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_clients_pmf(&d, &area, 50, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| area.contains(p)));
    }

    #[test]
    fn snapshot_count_for_default_horizon() {
        assert_eq!(MobilityParams::default().snapshot_times().len(), 10);
    }

    #[test]
    fn csv_round_trip() {
        let aps = grid_aps(24.0, 20.0, 2, 2).unwrap();
        let clients = vec![Point::new(1.5, 2.25), Point::new(23.0, 19.0)];
        let walls = vec![Wall::new(Point::new(12.0, 0.0), Point::new(12.0, 8.0), 12.5).unwrap()];
        let t = Topology::new(24.0, 20.0, aps, clients, walls).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(Topology::read_csv(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn topology_rejects_points_outside() {
        assert!(Topology::new(10.0, 10.0, vec![Point::new(5.0, 5.0)], vec![Point::new(11.0, 1.0)], vec![]).is_err());
        assert!(Topology::new(10.0, 10.0, vec![], vec![Point::new(1.0, 1.0)], vec![]).is_err());
    }
}
