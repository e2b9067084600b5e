//! Config-driven experiments shared by the command-line front end and the
//! acceptance tests.
//!
//! An experiment config is a TOML document. Top-level keys describe the
//! scenario; the optional `[fpid-t1]`, `[fpid-it2]` and `[nmpc]` tables
//! enable a controller each and hold its settings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fpid::{EngineKind, FpidConfig};
use crate::kinematics::OmniGeometry;
use crate::nmpc::OcpConfig;
use crate::planning::{Cell, OccupancyGrid, PlanningError, ReferenceTrajectory};
use crate::simlab::{
    self, horizon_sweep, map_episodes, run_episode, run_step_response, ControllerSpec, Episode, EpisodeLog, HorizonRow,
    NoiseModel, SimError, StepResponse,
};

pub const METRICS_CSV_HEADER: &str = "controller,scenario,tracking_time,me_xy,mae_theta";
pub const STEP_CSV_HEADER: &str = "controller,axis,overshoot_pct,rise_time,settling_time";
pub const HORIZON_CSV_HEADER: &str = "horizon,me_xy,mae_theta";

pub const CONTROLLER_IDS: [&str; 3] = ["fpid-t1", "fpid-it2", "nmpc"];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Planning(#[from] PlanningError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl ExperimentError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.into(),
            source,
        }
    }
}

fn default_goal() -> [usize; 2] {
    [19, 19]
}

fn default_total_time() -> f64 {
    30.0
}

fn default_ts() -> f64 {
    0.1
}

fn default_scenario() -> String {
    "standard".into()
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_horizons() -> Vec<usize> {
    vec![1, 5, 10, 15, 20]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Map file; the bundled standard map when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<PathBuf>,
    /// Start cell as `[col, row]`.
    #[serde(default)]
    pub start: [usize; 2],
    #[serde(default = "default_goal")]
    pub goal: [usize; 2],
    #[serde(default = "default_total_time")]
    pub total_time: f64,
    #[serde(default = "default_ts")]
    pub ts: f64,
    #[serde(default)]
    pub noise: bool,
    #[serde(default)]
    pub seed: u64,
    /// Label written to the metrics CSV.
    #[serde(default = "default_scenario")]
    pub scenario: String,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Subset of the configured controllers to run, in order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controllers: Option<Vec<String>>,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    #[serde(default)]
    pub robot: OmniGeometry,
    #[serde(default)]
    pub noise_model: NoiseModel,
    #[serde(rename = "fpid-t1", default, skip_serializing_if = "Option::is_none")]
    pub fpid_t1: Option<FpidConfig>,
    #[serde(rename = "fpid-it2", default, skip_serializing_if = "Option::is_none")]
    pub fpid_it2: Option<FpidConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nmpc: Option<OcpConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            map: None,
            start: [0, 0],
            goal: default_goal(),
            total_time: default_total_time(),
            ts: default_ts(),
            noise: false,
            seed: 0,
            scenario: default_scenario(),
            out: default_out(),
            controllers: None,
            horizons: default_horizons(),
            robot: OmniGeometry::default(),
            noise_model: NoiseModel::default(),
            fpid_t1: Some(FpidConfig::with_engine(EngineKind::T1)),
            fpid_it2: Some(FpidConfig::with_engine(EngineKind::It2)),
            nmpc: Some(OcpConfig::default()),
        }
    }
}

impl ExperimentConfig {
    /// Standard map scenario with all three controllers at their defaults.
    pub fn standard(total_time: f64) -> Self {
        ExperimentConfig {
            total_time,
            ..Default::default()
        }
    }

    /// Parses a config; a relative `map` is resolved against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, ExperimentError> {
        let mut cfg: ExperimentConfig = toml::from_str(text)?;
        if let Some(map) = &cfg.map {
            if map.is_relative() {
                cfg.map = Some(base_dir.join(map));
            }
        }
        cfg.validate()?;
        // The engine follows the section name.
        if let Some(c) = cfg.fpid_it2.as_mut() {
            c.engine = EngineKind::It2;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// The config with every default spelled out.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment config serialises")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return bad(format!("ts must be positive, got {}", self.ts));
        }
        if !(self.total_time > self.ts && self.total_time.is_finite()) {
            return bad(format!("total_time must exceed ts, got {}", self.total_time));
        }
        for (name, section, engine) in [
            ("fpid-t1", &self.fpid_t1, EngineKind::T1),
            ("fpid-it2", &self.fpid_it2, EngineKind::It2),
        ] {
            if let Some(c) = section {
                if c.engine != engine && c.engine != EngineKind::default() {
                    return bad(format!("[{name}] cannot select engine {:?}", c.engine));
                }
                c.validate().map_err(|m| ExperimentError::Config(format!("[{name}] {m}")))?;
            }
        }
        if let Some(n) = &self.nmpc {
            n.validate().map_err(|e| ExperimentError::Config(format!("[nmpc] {e}")))?;
        }
        if let Some(list) = &self.controllers {
            if list.is_empty() {
                return bad("controllers list is empty".into());
            }
            for id in list {
                if !CONTROLLER_IDS.contains(&id.as_str()) {
                    return bad(format!("unknown controller `{id}`"));
                }
                if !self.has_section(id) {
                    return bad(format!("controller `{id}` has no [{id}] section"));
                }
            }
        }
        Ok(())
    }

    fn has_section(&self, id: &str) -> bool {
        match id {
            "fpid-t1" => self.fpid_t1.is_some(),
            "fpid-it2" => self.fpid_it2.is_some(),
            "nmpc" => self.nmpc.is_some(),
            _ => false,
        }
    }

    /// Controllers to run, each with its resolved settings.
    pub fn controller_specs(&self) -> Result<Vec<ControllerSpec>, ExperimentError> {
        let ids: Vec<&str> = match &self.controllers {
            Some(list) => list.iter().map(String::as_str).collect(),
            None => CONTROLLER_IDS.iter().copied().filter(|id| self.has_section(id)).collect(),
        };
        if ids.is_empty() {
            return Err(ExperimentError::Config(
                "no controller section ([fpid-t1], [fpid-it2] or [nmpc]) configured".into(),
            ));
        }
        ids.into_iter()
            .map(|id| {
                Ok(match id {
                    "fpid-t1" => ControllerSpec::Fpid(FpidConfig {
                        engine: EngineKind::T1,
                        ..self.fpid_t1.clone().unwrap()
                    }),
                    "fpid-it2" => ControllerSpec::Fpid(FpidConfig {
                        engine: EngineKind::It2,
                        ..self.fpid_it2.clone().unwrap()
                    }),
                    _ => ControllerSpec::Nmpc(self.nmpc_config()),
                })
            })
            .collect()
    }

    /// The `[nmpc]` settings with the scenario sample time.
    pub fn nmpc_config(&self) -> OcpConfig {
        OcpConfig {
            ts: self.ts,
            ..self.nmpc.clone().unwrap_or_default()
        }
    }

    pub fn grid(&self) -> Result<OccupancyGrid, ExperimentError> {
        match &self.map {
            None => Ok(simlab::standard_map()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
                Ok(OccupancyGrid::parse(&text)?)
            }
        }
    }

    pub fn start_cell(&self) -> Cell {
        Cell::new(self.start[0], self.start[1])
    }

    pub fn goal_cell(&self) -> Cell {
        Cell::new(self.goal[0], self.goal[1])
    }

    pub fn trajectory(&self) -> Result<ReferenceTrajectory, ExperimentError> {
        let grid = self.grid()?;
        Ok(simlab::plan_reference(&grid, self.start_cell(), self.goal_cell(), self.total_time, self.ts)?)
    }

    pub fn episode(&self) -> Result<Episode, ExperimentError> {
        let mut ep = Episode::new(self.trajectory()?);
        ep.geometry = self.robot;
        ep.noise = self.noise.then_some(self.noise_model);
        ep.seed = self.seed;
        Ok(ep)
    }
}

/// Outcome of one controller on the shared reference. A failed episode is
/// kept so the remaining controllers still run.
#[derive(Debug)]
pub struct TrackRun {
    pub controller: &'static str,
    pub outcome: Result<EpisodeLog, SimError>,
}

pub fn run_track(cfg: &ExperimentConfig, parallel: bool) -> Result<Vec<TrackRun>, ExperimentError> {
    let specs = cfg.controller_specs()?;
    let episode = cfg.episode()?;
    Ok(map_episodes(&specs, parallel, |spec| TrackRun {
        controller: spec.id(),
        outcome: run_episode(&episode, spec),
    }))
}

/// Metrics table; failed runs get empty metric fields. With noise enabled a
/// `noise` column is appended.
pub fn metrics_csv(cfg: &ExperimentConfig, runs: &[TrackRun]) -> String {
    let mut s = String::from(METRICS_CSV_HEADER);
    if cfg.noise {
        s.push_str(",noise");
    }
    s.push('\n');
    for run in runs {
        write!(s, "{},{},{},", run.controller, cfg.scenario, cfg.total_time).unwrap();
        match run.outcome.as_ref().ok().and_then(|log| log.metrics().ok()) {
            Some(m) => write!(s, "{},{}", m.me_xy, m.mae_theta).unwrap(),
            None => s.push(','),
        }
        if cfg.noise {
            s.push_str(",true");
        }
        s.push('\n');
    }
    s
}

pub struct StepRun {
    pub controller: &'static str,
    pub responses: Vec<StepResponse>,
}

pub fn run_step(cfg: &ExperimentConfig, parallel: bool) -> Result<Vec<StepRun>, ExperimentError> {
    let specs = cfg.controller_specs()?;
    map_episodes(&specs, parallel, |spec| {
        Ok(StepRun {
            controller: spec.id(),
            responses: run_step_response(spec, &cfg.robot)?,
        })
    })
    .into_iter()
    .collect()
}

fn optional(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn step_csv(runs: &[StepRun]) -> String {
    let mut s = String::from(STEP_CSV_HEADER);
    s.push('\n');
    for run in runs {
        for r in &run.responses {
            writeln!(
                s,
                "{},{},{},{},{}",
                run.controller,
                r.axis.as_str(),
                r.metrics.overshoot_pct,
                optional(r.metrics.rise_time),
                optional(r.metrics.settling_time)
            )
            .unwrap();
        }
    }
    s
}

pub fn run_horizon(cfg: &ExperimentConfig, horizons: &[usize], parallel: bool) -> Result<Vec<HorizonRow>, ExperimentError> {
    if horizons.is_empty() {
        return Err(ExperimentError::Config("no horizon values given".into()));
    }
    if let Some(h) = horizons.iter().find(|h| **h == 0) {
        return Err(ExperimentError::Config(format!("horizon must be at least 1, got {h}")));
    }
    let episode = cfg.episode()?;
    Ok(horizon_sweep(&episode, &cfg.nmpc_config(), horizons, parallel)?)
}

pub fn horizon_csv(rows: &[HorizonRow]) -> String {
    let mut s = String::from(HORIZON_CSV_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(s, "{},{},{}", r.horizon, r.metrics.me_xy, r.metrics.mae_theta).unwrap();
    }
    s
}
