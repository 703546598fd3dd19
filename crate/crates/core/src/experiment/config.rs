use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loadsolve::SaParams;
use crate::model::FrameConfig;
use crate::phy::{Point, RadioConfig, Wall};
use crate::satsolve::{RelaxedSolverParams, TieBreak};
use crate::scenario::{MobilityParams, PlacementDensity};

/// Association policy evaluated by the runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Highest-rate AP, equal airtime.
    SnrEa,
    /// Highest-rate AP, water-filled airtime.
    SnrWf,
    GreedyEa,
    GreedyWf,
    /// Min-max utilisation association, equal airtime.
    MinmaxEa,
    MinmaxWf,
    /// Relaxation plus iterative rounding, equal airtime.
    ProposedSat,
    /// Simulated annealing over water-filled associations.
    ProposedSawf,
    /// Exhaustive search for the scenario's traffic model.
    Oracle,
}

impl Policy {
    pub const ALL: [Policy; 9] = [
        Policy::SnrEa,
        Policy::SnrWf,
        Policy::GreedyEa,
        Policy::GreedyWf,
        Policy::MinmaxEa,
        Policy::MinmaxWf,
        Policy::ProposedSat,
        Policy::ProposedSawf,
        Policy::Oracle,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Policy::SnrEa => "snr-ea",
            Policy::SnrWf => "snr-wf",
            Policy::GreedyEa => "greedy-ea",
            Policy::GreedyWf => "greedy-wf",
            Policy::MinmaxEa => "minmax-ea",
            Policy::MinmaxWf => "minmax-wf",
            Policy::ProposedSat => "proposed-sat",
            Policy::ProposedSawf => "proposed-sawf",
            Policy::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.iter().copied().find(|p| p.label() == s).ok_or_else(|| Error::Config {
            line: None,
            message: format!(
                "unknown policy '{s}' (expected one of {})",
                Self::ALL.map(|p| p.label()).join(", ")
            ),
        })
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Offered load per client.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DemandSpec {
    Saturated,
    /// Independent uniform draws in `[min_bps, max_bps]`.
    Uniform { min_bps: f64, max_bps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    Pmf,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub width: f64,
    pub height: f64,
    pub ap_rows: usize,
    pub ap_cols: usize,
    pub clients: usize,
    pub placement: Placement,
    pub density: PlacementDensity,
    pub walls: Vec<Wall>,
    /// Present for mobility runs; clients start inside its movement box.
    pub mobility: Option<MobilityParams>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            width: 24.0,
            height: 20.0,
            ap_rows: 2,
            ap_cols: 2,
            clients: 10,
            placement: Placement::Pmf,
            density: PlacementDensity::office_default(),
            walls: Vec::new(),
            mobility: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub relaxed: RelaxedSolverParams,
    pub sa: SaParams,
    pub tie: TieBreak,
    /// Largest search space the oracle policy will enumerate.
    pub oracle_limit: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            relaxed: RelaxedSolverParams::default(),
            sa: SaParams::default(),
            tie: TieBreak::default(),
            oracle_limit: crate::oracle::DEFAULT_SEARCH_LIMIT,
        }
    }
}

/// Full description of an experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Written to the `run_id` column.
    pub name: String,
    pub seeds: Vec<u64>,
    pub policies: Vec<Policy>,
    /// Record solver wall time; disable for byte-identical outputs.
    pub timing: bool,
    /// Write one annealing trace CSV per proposed-sawf cell.
    pub traces: bool,
    pub frames: FrameConfig,
    pub radio: RadioConfig,
    pub scenario: ScenarioConfig,
    pub demand: DemandSpec,
    pub solver: SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset("office-4ap").expect("built-in preset")
    }
}

/// Names accepted by [`ExperimentConfig::preset`].
pub const PRESETS: [&str; 6] = ["office-4ap", "clustered-9ap", "finite-4ap", "finite-9ap", "mobility-9ap", "obstacles-9ap"];

impl ExperimentConfig {
    /// Built-in scenario grids.
    ///
    /// * `office-4ap`: 24 x 20 m, 2 x 2 APs, 10 clients, backlogged.
    /// * `clustered-9ap`: 30 x 30 m, 3 x 3 APs, 30 clustered clients, backlogged.
    /// * `finite-4ap`: the office with demands in 0.46 to 2.3 Gb/s.
    /// * `finite-9ap`: the 9-AP hall with demands in 0.5 to 1.25 Gb/s.
    /// * `mobility-9ap`: `finite-9ap` with random-waypoint snapshots.
    /// * `obstacles-9ap`: `clustered-9ap` with two partition walls.
    pub fn preset(name: &str) -> Result<Self> {
        let office = ScenarioConfig::default();
        let hall = ScenarioConfig { width: 30.0, height: 30.0, ap_rows: 3, ap_cols: 3, clients: 30, ..office.clone() };
        let base = |scenario: ScenarioConfig, demand: DemandSpec, policies: &[Policy]| Self {
            name: name.to_string(),
            seeds: (1..=30).collect(),
            policies: policies.to_vec(),
            timing: true,
            traces: false,
            frames: FrameConfig::default(),
            radio: RadioConfig::default(),
            scenario,
            demand,
            solver: SolverConfig::default(),
        };
        use Policy::*;
        let cfg = match name {
            "office-4ap" => base(office, DemandSpec::Saturated, &[SnrEa, GreedyEa, ProposedSat, Oracle]),
            "clustered-9ap" => base(hall, DemandSpec::Saturated, &[SnrEa, GreedyEa, MinmaxEa, ProposedSat]),
            "finite-4ap" => base(
                office,
                DemandSpec::Uniform { min_bps: 0.46e9, max_bps: 2.3e9 },
                &[SnrEa, SnrWf, MinmaxEa, ProposedSawf, Oracle],
            ),
            "finite-9ap" | "mobility-9ap" => {
                let scenario = if name == "mobility-9ap" {
                    ScenarioConfig { mobility: Some(MobilityParams::default()), ..hall }
                } else {
                    hall
                };
                base(
                    scenario,
                    DemandSpec::Uniform { min_bps: 0.5e9, max_bps: 1.25e9 },
                    &[SnrEa, SnrWf, MinmaxEa, ProposedSawf],
                )
            }
            "obstacles-9ap" => {
                let walls = vec![
                    Wall { a: Point::new(10.0, 0.0), b: Point::new(10.0, 12.0), attenuation_db: 20.0 },
                    Wall { a: Point::new(20.0, 18.0), b: Point::new(20.0, 30.0), attenuation_db: 20.0 },
                ];
                base(ScenarioConfig { walls, ..hall }, DemandSpec::Saturated, &[SnrEa, GreedyEa, MinmaxEa, ProposedSat])
            }
            _ => {
                return Err(Error::Config {
                    line: None,
                    message: format!("unknown scenario '{name}' (expected one of {})", PRESETS.join(", ")),
                })
            }
        };
        Ok(cfg)
    }

    /// Parses and validates a TOML config. Errors carry the offending line.
    pub fn from_toml(source: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(source).map_err(|e| Error::Config {
            line: e.span().map(|s| line_of(source, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.validate().map_err(|e| match e {
            Error::Config { line: None, message } => {
                let (key, detail) = message.split_once(':').unwrap_or((&message, ""));
                let line = locate_key(source, key.trim()).map(|at| {
                    // nested errors usually open with the field they reject
                    let field = detail.rsplit(": ").next().unwrap_or_default().split_whitespace().next().unwrap_or_default();
                    locate_in_table(source, at, field).unwrap_or(at)
                });
                Error::Config { line, message }
            }
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serialisable")
    }

    /// Semantic checks. Messages start with the offending key so that
    /// [`from_toml`](Self::from_toml) can anchor them to a line.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: String| Err(Error::Config { line: None, message: format!("{key}: {why}") });
        if self.seeds.is_empty() {
            return bad("seeds", "at least one seed is required".into());
        }
        if self.policies.is_empty() {
            return bad("policies", "at least one policy is required".into());
        }
        let s = &self.scenario;
        if !(s.width > 0.0 && s.height > 0.0) {
            return bad("width", format!("area must be positive, got {} x {}", s.width, s.height));
        }
        if s.ap_rows == 0 || s.ap_cols == 0 {
            return bad("ap_rows", "AP grid needs at least one row and one column".into());
        }
        if s.clients == 0 {
            return bad("clients", "at least one client is required".into());
        }
        if let Err(e) = s.density.validate() {
            return bad("density", e.to_string());
        }
        for w in &s.walls {
            if let Err(e) = w.validate() {
                return bad("walls", e.to_string());
            }
        }
        if let Some(m) = &s.mobility {
            if let Err(e) = m.validate() {
                return bad("mobility", e.to_string());
            }
        }
        if let Err(e) = self.frames.validate() {
            return bad("frames", e.to_string());
        }
        if let Err(e) = self.radio.validate() {
            return bad("radio", e.to_string());
        }
        if let Err(e) = self.solver.relaxed.validate() {
            return bad("relaxed", e.to_string());
        }
        if let Err(e) = self.solver.sa.validate() {
            return bad("sa", e.to_string());
        }
        match self.demand {
            DemandSpec::Saturated => {
                if self.policies.contains(&Policy::ProposedSawf) {
                    return bad("policies", "proposed-sawf needs a finite demand model".into());
                }
            }
            DemandSpec::Uniform { min_bps, max_bps } => {
                if !(min_bps > 0.0 && min_bps <= max_bps && max_bps.is_finite()) {
                    return bad("min_bps", format!("demand range must satisfy 0 < min <= max, got [{min_bps}, {max_bps}]"));
                }
            }
        }
        Ok(())
    }

    pub fn n_aps(&self) -> usize {
        self.scenario.ap_rows * self.scenario.ap_cols
    }
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

fn assigns(line: &str, key: &str) -> bool {
    line.trim_start().strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
}

/// First line assigning `key` or opening a table named `key`.
fn locate_key(source: &str, key: &str) -> Option<usize> {
    if key.is_empty() {
        return None;
    }
    source
        .lines()
        .position(|l| {
            let t = l.trim_start();
            let table = t.starts_with('[') && t.trim_matches(|c| c == '[' || c == ']').rsplit('.').next() == Some(key);
            assigns(l, key) || table
        })
        .map(|i| i + 1)
}

/// Line assigning `field` inside the table that opens at 1-based line `at`.
fn locate_in_table(source: &str, at: usize, field: &str) -> Option<usize> {
    if field.is_empty() || !source.lines().nth(at - 1)?.trim_start().starts_with('[') {
        return None;
    }
    source
        .lines()
        .enumerate()
        .skip(at)
        .take_while(|(_, l)| !l.trim_start().starts_with('['))
        .find(|(_, l)| assigns(l, field))
        .map(|(i, _)| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates_and_round_trips() {
        for name in PRESETS {
            let cfg = ExperimentConfig::preset(name).unwrap();
            cfg.validate().unwrap();
            let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
            assert_eq!(back, cfg, "{name}");
        }
    }

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn parse_error_reports_line() {
        let src = "name = \"x\"\nseeds = [1, 2]\nbogus = 3\n";
        match ExperimentConfig::from_toml(src) {
            Err(Error::Config { line: Some(3), .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_error_reports_line() {
        let src = "name = \"x\"\n\n[scenario]\nwidth = 30.0\nclients = 0\n";
        match ExperimentConfig::from_toml(src) {
            Err(Error::Config { line: Some(5), message }) => assert!(message.starts_with("clients")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sawf_requires_finite_demand() {
        let src = "policies = [\"proposed-sawf\"]\n";
        assert!(matches!(ExperimentConfig::from_toml(src), Err(Error::Config { line: Some(1), .. })));
    }

    #[test]
    fn policy_labels_round_trip() {
        for p in Policy::ALL {
            assert_eq!(Policy::parse(p.label()).unwrap(), p);
        }
        assert!(Policy::parse("daa").is_err());
    }
}
