//! Kinematic plant, feedback noise, closed-loop episodes and evaluation
//! metrics.

mod metrics;
mod noise;

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::fpid::{EngineKind, FpidConfig, FpidController};
use crate::fuzzy::FuzzyError;
use crate::kinematics::{forward_kinematics, integrate_pose, inverse_kinematics, BodyVelocity, OmniGeometry, RobotPose, WheelSpeeds};
use crate::nmpc::{NmpcController, NmpcError, OcpConfig};
use crate::planning::{astar, sample_reference, smooth, Cell, OccupancyGrid, PlanningError, ReferenceTrajectory};

pub use metrics::{step_metrics, tracking_metrics, StepMetrics, TrackingMetrics};
pub use noise::NoiseModel;

pub const RUN_CSV_HEADER: &str =
    "n,t,x_ref,y_ref,theta_ref,x,y,theta,x_meas,y_meas,theta_meas,vx_cmd,vy_cmd,omega_cmd,phi1,phi2,phi3,phi4";
pub const RUN_CSV_DIAGNOSTICS: &str = ",cost,iters,kkt";

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error(transparent)]
    Nmpc(#[from] NmpcError),
    #[error(transparent)]
    Planning(#[from] PlanningError),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("run CSV line {line}: {msg}")]
    RunParse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    pub cost: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// One logged control step: the state at `t` and the command issued there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    pub reference: RobotPose,
    pub truth: RobotPose,
    pub measured: RobotPose,
    pub command: BodyVelocity,
    pub wheels: WheelSpeeds,
    pub diagnostics: Option<SolverDiagnostics>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub velocity: BodyVelocity,
    pub diagnostics: Option<SolverDiagnostics>,
}

/// A tracking controller driven once per sample with the measured pose.
pub trait Controller: Send {
    fn command(&mut self, measured: &RobotPose, trajectory: &ReferenceTrajectory, n: usize) -> Result<ControlOutput, SimError>;
}

impl Controller for FpidController {
    fn command(&mut self, measured: &RobotPose, trajectory: &ReferenceTrajectory, n: usize) -> Result<ControlOutput, SimError> {
        let target = trajectory.pose_at(n + self.config().lookahead);
        let velocity = FpidController::command(self, measured, &target, trajectory.ts())?;
        Ok(ControlOutput {
            velocity,
            diagnostics: None,
        })
    }
}

impl Controller for NmpcController {
    fn command(&mut self, measured: &RobotPose, trajectory: &ReferenceTrajectory, n: usize) -> Result<ControlOutput, SimError> {
        let step = NmpcController::command(self, measured, trajectory, n)?;
        Ok(ControlOutput {
            velocity: step.velocity,
            diagnostics: Some(SolverDiagnostics {
                cost: step.cost,
                iterations: step.iterations,
                kkt_residual: step.kkt_residual,
            }),
        })
    }
}

/// A controller choice together with its configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec {
    Fpid(FpidConfig),
    Nmpc(OcpConfig),
}

impl ControllerSpec {
    pub fn id(&self) -> &'static str {
        match self {
            ControllerSpec::Fpid(c) if c.engine == EngineKind::T1 => "fpid-t1",
            ControllerSpec::Fpid(_) => "fpid-it2",
            ControllerSpec::Nmpc(_) => "nmpc",
        }
    }

    pub fn build(&self) -> Result<Box<dyn Controller>, SimError> {
        Ok(match self {
            ControllerSpec::Fpid(cfg) => {
                cfg.validate().map_err(SimError::Config)?;
                Box::new(FpidController::new(cfg.clone())?)
            }
            ControllerSpec::Nmpc(cfg) => Box::new(NmpcController::new(cfg.clone())?),
        })
    }
}

/// Everything needed to reproduce one closed-loop run apart from the
/// controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub trajectory: ReferenceTrajectory,
    pub initial: RobotPose,
    pub geometry: OmniGeometry,
    pub noise: Option<NoiseModel>,
    pub seed: u64,
}

impl Episode {
    /// Noise-free run starting on the first reference pose.
    pub fn new(trajectory: ReferenceTrajectory) -> Self {
        Episode {
            initial: trajectory.pose_at(0),
            trajectory,
            geometry: OmniGeometry::default(),
            noise: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub controller: String,
    pub records: Vec<StepRecord>,
}

/// Runs `spec` over every reference sample. Per step the controller sees the
/// true pose plus noise; its command goes through the wheel-space round trip
/// before integrating the true pose.
pub fn run_episode(episode: &Episode, spec: &ControllerSpec) -> Result<EpisodeLog, SimError> {
    let mut controller = spec.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(episode.seed);
    let traj = &episode.trajectory;
    let ts = traj.ts();
    let mut truth = episode.initial;
    let mut records = Vec::with_capacity(traj.len());
    for n in 0..traj.len() {
        let measured = match &episode.noise {
            Some(model) => {
                let e = model.sample(n, ts, &mut rng);
                RobotPose::new(truth.x + e[0], truth.y + e[1], truth.theta + e[2])
            }
            None => truth,
        };
        let out = controller.command(&measured, traj, n)?;
        let wheels = inverse_kinematics(&episode.geometry, &out.velocity);
        let applied = forward_kinematics(&episode.geometry, &wheels);
        records.push(StepRecord {
            n,
            t: traj.time(n),
            reference: traj.pose_at(n),
            truth,
            measured,
            command: out.velocity,
            wheels,
            diagnostics: out.diagnostics,
        });
        truth = integrate_pose(&truth, &applied, ts);
    }
    Ok(EpisodeLog {
        controller: spec.id().to_string(),
        records,
    })
}

impl EpisodeLog {
    pub fn metrics(&self) -> Result<TrackingMetrics, SimError> {
        tracking_metrics(&self.records)
    }

    pub fn has_diagnostics(&self) -> bool {
        self.records.iter().any(|r| r.diagnostics.is_some())
    }

    pub fn to_csv(&self) -> String {
        let diag = self.has_diagnostics();
        let mut s = String::from(RUN_CSV_HEADER);
        if diag {
            s.push_str(RUN_CSV_DIAGNOSTICS);
        }
        s.push('\n');
        for r in &self.records {
            let w = r.wheels.0;
            write!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.t,
                r.reference.x,
                r.reference.y,
                r.reference.theta,
                r.truth.x,
                r.truth.y,
                r.truth.theta,
                r.measured.x,
                r.measured.y,
                r.measured.theta,
                r.command.vx,
                r.command.vy,
                r.command.omega,
                w[0],
                w[1],
                w[2],
                w[3]
            )
            .unwrap();
            if diag {
                match &r.diagnostics {
                    Some(d) => write!(s, ",{},{},{}", d.cost, d.iterations, d.kkt_residual).unwrap(),
                    None => s.push_str(",,,"),
                }
            }
            s.push('\n');
        }
        s
    }

    /// Parses a run CSV written by [`EpisodeLog::to_csv`].
    pub fn from_csv(controller: &str, text: &str) -> Result<Self, SimError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default().trim();
        let diag = if header == RUN_CSV_HEADER {
            false
        } else if header.strip_suffix(RUN_CSV_DIAGNOSTICS) == Some(RUN_CSV_HEADER) {
            true
        } else {
            return Err(SimError::RunParse {
                line: 1,
                msg: "unexpected header".into(),
            });
        };
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: String| SimError::RunParse { line: line_no, msg };
            let fields: Vec<&str> = line.split(',').collect();
            let expected = if diag { 21 } else { 18 };
            if fields.len() != expected {
                return Err(err(format!("expected {expected} fields, got {}", fields.len())));
            }
            let f = |k: usize| fields[k].trim().parse::<f64>().map_err(|e| err(format!("field {}: {e}", k + 1)));
            let pose = |k: usize| -> Result<RobotPose, SimError> { Ok(RobotPose { x: f(k)?, y: f(k + 1)?, theta: f(k + 2)? }) };
            let diagnostics = if diag && !fields[18].is_empty() {
                Some(SolverDiagnostics {
                    cost: f(18)?,
                    iterations: fields[19].parse().map_err(|e| err(format!("iters: {e}")))?,
                    kkt_residual: f(20)?,
                })
            } else {
                None
            };
            records.push(StepRecord {
                n: fields[0].parse().map_err(|e| err(format!("n: {e}")))?,
                t: f(1)?,
                reference: pose(2)?,
                truth: pose(5)?,
                measured: pose(8)?,
                command: BodyVelocity {
                    vx: f(11)?,
                    vy: f(12)?,
                    omega: f(13)?,
                },
                wheels: WheelSpeeds([f(14)?, f(15)?, f(16)?, f(17)?]),
                diagnostics,
            });
        }
        Ok(EpisodeLog {
            controller: controller.to_string(),
            records,
        })
    }
}

/// Runs `f` over `items`, on scoped threads when `parallel` is set. Output
/// order follows input order either way.
pub fn map_episodes<T: Sync, R: Send>(items: &[T], parallel: bool, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if !parallel || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = items.iter().map(|item| scope.spawn(|| f(item))).collect();
        handles.into_iter().map(|h| h.join().expect("episode thread panicked")).collect()
    })
}

const STANDARD_MAP: &str = include_str!("../../data/standard_map.txt");

/// The bundled 20×20 map with three rectangular obstacles.
pub fn standard_map() -> OccupancyGrid {
    OccupancyGrid::parse(STANDARD_MAP).expect("bundled map parses")
}

pub const STANDARD_START: Cell = Cell { col: 0, row: 0 };
pub const STANDARD_GOAL: Cell = Cell { col: 19, row: 19 };

/// Plans, smooths and samples a reference on `grid`.
pub fn plan_reference(grid: &OccupancyGrid, start: Cell, goal: Cell, total_time: f64, ts: f64) -> Result<ReferenceTrajectory, PlanningError> {
    let path = astar(grid, start, goal)?;
    let curve = smooth(&path, grid)?;
    sample_reference(&curve, total_time, ts)
}

/// Reference on the standard map from corner to corner.
pub fn standard_scenario(total_time: f64, ts: f64) -> Result<ReferenceTrajectory, PlanningError> {
    plan_reference(&standard_map(), STANDARD_START, STANDARD_GOAL, total_time, ts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepAxis {
    X,
    Y,
    Theta,
}

impl StepAxis {
    pub const ALL: [StepAxis; 3] = [StepAxis::X, StepAxis::Y, StepAxis::Theta];

    pub fn as_str(self) -> &'static str {
        match self {
            StepAxis::X => "x",
            StepAxis::Y => "y",
            StepAxis::Theta => "theta",
        }
    }

    fn setpoint(self) -> RobotPose {
        match self {
            StepAxis::X => RobotPose::new(1.0, 0.0, 0.0),
            StepAxis::Y => RobotPose::new(0.0, 1.0, 0.0),
            StepAxis::Theta => RobotPose::new(0.0, 0.0, 1.0),
        }
    }

    fn component(self, p: &RobotPose) -> f64 {
        match self {
            StepAxis::X => p.x,
            StepAxis::Y => p.y,
            StepAxis::Theta => p.theta,
        }
    }
}

pub const STEP_DURATION: f64 = 10.0;
pub const STEP_TS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct StepResponse {
    pub axis: StepAxis,
    pub metrics: StepMetrics,
    pub log: EpisodeLog,
}

impl StepResponse {
    /// `(t, y)` of the stepped component of the true pose.
    pub fn series(&self) -> Vec<(f64, f64)> {
        self.log.records.iter().map(|r| (r.t, self.axis.component(&r.truth))).collect()
    }
}

/// Unit steps in x, y and θ from rest at the origin, each held for 10 s.
pub fn run_step_response(spec: &ControllerSpec, geometry: &OmniGeometry) -> Result<Vec<StepResponse>, SimError> {
    let samples = (STEP_DURATION / STEP_TS + 1e-9).floor() as usize + 1;
    StepAxis::ALL
        .iter()
        .map(|&axis| {
            let trajectory = ReferenceTrajectory::constant(axis.setpoint(), samples, STEP_TS)?;
            let episode = Episode {
                trajectory,
                initial: RobotPose::default(),
                geometry: *geometry,
                noise: None,
                seed: 0,
            };
            let log = run_episode(&episode, spec)?;
            let series: Vec<(f64, f64)> = log.records.iter().map(|r| (r.t, axis.component(&r.truth))).collect();
            let metrics = step_metrics(&series, axis.component(&axis.setpoint()))?;
            Ok(StepResponse { axis, metrics, log })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorizonRow {
    pub horizon: usize,
    pub metrics: TrackingMetrics,
}

/// One NMPC episode per horizon length, everything else taken from `base`.
pub fn horizon_sweep(episode: &Episode, base: &OcpConfig, horizons: &[usize], parallel: bool) -> Result<Vec<HorizonRow>, SimError> {
    if let Some(bad) = horizons.iter().find(|h| **h == 0) {
        return Err(SimError::Config(format!("horizon must be at least 1, got {bad}")));
    }
    map_episodes(horizons, parallel, |&horizon| {
        let spec = ControllerSpec::Nmpc(OcpConfig { horizon, ..base.clone() });
        let metrics = run_episode(episode, &spec)?.metrics()?;
        Ok(HorizonRow { horizon, metrics })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standing_still_at_goal() {
        let goal = RobotPose::new(1.0, 1.0, 0.0);
        let mut ep = Episode::new(ReferenceTrajectory::constant(goal, 20, 0.1).unwrap());
        ep.initial = goal;
        for spec in [ControllerSpec::Fpid(FpidConfig::default()), ControllerSpec::Nmpc(OcpConfig::default())] {
            let log = run_episode(&ep, &spec).unwrap();
            assert_eq!(log.records.len(), 20);
            assert!(log.records.iter().all(|r| r.truth == goal));
            assert_eq!(log.metrics().unwrap().me_xy, 0.0);
        }
    }

    #[test]
    fn offset_start_reports_offset() {
        let goal = RobotPose::new(0.3, 0.4, 0.0);
        let mut ep = Episode::new(ReferenceTrajectory::constant(goal, 2, 0.1).unwrap());
        ep.initial = RobotPose::default();
        let log = run_episode(&ep, &ControllerSpec::Fpid(FpidConfig::default())).unwrap();
        assert!((log.records[0].reference.distance_to(&log.records[0].truth) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn run_csv_round_trip() {
        let mut ep = Episode::new(ReferenceTrajectory::constant(RobotPose::new(0.5, 0.0, 0.2), 15, 0.1).unwrap());
        ep.initial = RobotPose::default();
        ep.noise = Some(NoiseModel::default());
        ep.seed = 3;
        for spec in [ControllerSpec::Fpid(FpidConfig::default()), ControllerSpec::Nmpc(OcpConfig::default())] {
            let log = run_episode(&ep, &spec).unwrap();
            let back = EpisodeLog::from_csv(spec.id(), &log.to_csv()).unwrap();
            assert_eq!(back, log);
        }
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<usize> = (0..8).collect();
        assert_eq!(map_episodes(&items, true, |i| i * 2), map_episodes(&items, false, |i| i * 2));
    }
}
