//! Nonlinear model predictive control on a unicycle prediction model.
//!
//! The optimal-control problem is transcribed with multiple shooting: the
//! decision vector holds the inputs `u₀..u_{Np−1}` followed by the states
//! `x₀..x_{Np}`. [`solve`] runs a Gauss-Newton SQP that keeps every iterate
//! dynamically consistent, so returned defects are zero up to rounding.

mod qp;
mod sqp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::wrap_angle;
use crate::kinematics::{BodyVelocity, RobotPose};
use crate::planning::ReferenceTrajectory;

pub use sqp::solve;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NmpcError {
    #[error("decision vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid NMPC config: {0}")]
    InvalidConfig(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcpConfig {
    pub horizon: usize,
    pub ts: f64,
    /// Diagonal of the state weight (x, y, θ).
    pub q: [f64; 3],
    /// Diagonal of the input weight (v, ω).
    pub r: [f64; 2],
    pub v_max: f64,
    pub omega_max: f64,
    pub kkt_tol: f64,
    pub max_iterations: usize,
    pub warm_start: bool,
}

impl Default for OcpConfig {
    fn default() -> Self {
        OcpConfig {
            horizon: 15,
            ts: 0.1,
            q: [15.0; 3],
            r: [1.0; 2],
            v_max: 1.5,
            omega_max: 3.14,
            kkt_tol: 1e-4,
            max_iterations: 50,
            warm_start: true,
        }
    }
}

impl OcpConfig {
    pub fn with_horizon(horizon: usize) -> Self {
        OcpConfig {
            horizon,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), NmpcError> {
        let bad = |m: String| Err(NmpcError::InvalidConfig(m));
        if self.horizon < 1 {
            return bad("horizon must be at least 1".into());
        }
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return bad(format!("ts must be positive, got {}", self.ts));
        }
        if self.q.iter().chain(self.r.iter()).any(|w| !(*w >= 0.0 && w.is_finite())) {
            return bad("weights must be non-negative".into());
        }
        if !(self.v_max > 0.0 && self.omega_max > 0.0) {
            return bad("input bounds must be positive".into());
        }
        if !(self.kkt_tol > 0.0) || self.max_iterations == 0 {
            return bad("kkt_tol and max_iterations must be positive".into());
        }
        Ok(())
    }

    /// Length of the multiple-shooting decision vector.
    pub fn decision_len(&self) -> usize {
        2 * self.horizon + 3 * (self.horizon + 1)
    }
}

/// One receding-horizon subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct OcpProblem {
    initial: RobotPose,
    x_ref: Vec<RobotPose>,
    u_ref: Vec<[f64; 2]>,
}

impl OcpProblem {
    pub fn new(initial: RobotPose, x_ref: Vec<RobotPose>, u_ref: Vec<[f64; 2]>) -> Result<Self, NmpcError> {
        if u_ref.is_empty() || x_ref.len() != u_ref.len() + 1 {
            return Err(NmpcError::InvalidProblem(format!(
                "need Np + 1 reference states and Np reference inputs, got {} and {}",
                x_ref.len(),
                u_ref.len()
            )));
        }
        Ok(OcpProblem { initial, x_ref, u_ref })
    }

    /// Window of `trajectory` starting at sample `k`; samples past the end
    /// hold the final pose with zero inputs.
    pub fn from_trajectory(trajectory: &ReferenceTrajectory, k: usize, initial: RobotPose, horizon: usize) -> Result<Self, NmpcError> {
        if horizon == 0 {
            return Err(NmpcError::InvalidConfig("horizon must be at least 1".into()));
        }
        let x_ref = (0..=horizon).map(|i| trajectory.pose_at(k + i)).collect();
        let u_ref = (0..horizon).map(|i| trajectory.input_at(k + i)).collect();
        Self::new(initial, x_ref, u_ref)
    }

    pub fn horizon(&self) -> usize {
        self.u_ref.len()
    }

    pub fn initial(&self) -> RobotPose {
        self.initial
    }

    pub fn x_ref(&self) -> &[RobotPose] {
        &self.x_ref
    }

    pub fn u_ref(&self) -> &[[f64; 2]] {
        &self.u_ref
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Converged,
    /// Iteration limit reached; the best iterate is returned.
    MaxIterations,
    /// The line search could not decrease the cost further.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcpSolution {
    pub inputs: Vec<[f64; 2]>,
    pub states: Vec<RobotPose>,
    pub cost: f64,
    pub kkt_residual: f64,
    pub defect_norm: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

impl OcpSolution {
    /// `[u₀ … u_{Np−1}, x₀ … x_{Np}]` flattened.
    pub fn decision_vector(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(2 * self.inputs.len() + 3 * self.states.len());
        for u in &self.inputs {
            w.extend_from_slice(u);
        }
        for x in &self.states {
            w.extend_from_slice(&[x.x, x.y, x.theta]);
        }
        w
    }

    /// Inputs advanced by one step with the last one repeated, for warm starts.
    pub fn shifted_inputs(&self) -> Vec<[f64; 2]> {
        let mut u: Vec<[f64; 2]> = self.inputs.iter().skip(1).copied().collect();
        if let Some(last) = self.inputs.last() {
            u.push(*last);
        }
        u
    }
}

/// Forward-Euler step of the unicycle model.
pub fn predict(state: &RobotPose, u: [f64; 2], ts: f64) -> RobotPose {
    let (s, c) = state.theta.sin_cos();
    RobotPose::new(state.x + ts * u[0] * c, state.y + ts * u[0] * s, state.theta + ts * u[1])
}

pub(crate) fn rollout(initial: &RobotPose, inputs: &[[f64; 2]], ts: f64) -> Vec<RobotPose> {
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(*initial);
    for u in inputs {
        let next = predict(states.last().unwrap(), *u, ts);
        states.push(next);
    }
    states
}

fn state_cost(x: &RobotPose, r: &RobotPose, q: &[f64; 3]) -> f64 {
    let e = [x.x - r.x, x.y - r.y, wrap_angle(x.theta - r.theta)];
    q[0] * e[0] * e[0] + q[1] * e[1] * e[1] + q[2] * e[2] * e[2]
}

fn input_cost(u: &[f64; 2], r: &[f64; 2], w: &[f64; 2]) -> f64 {
    let e = [u[0] - r[0], u[1] - r[1]];
    w[0] * e[0] * e[0] + w[1] * e[1] * e[1]
}

pub(crate) fn trajectory_cost(problem: &OcpProblem, cfg: &OcpConfig, inputs: &[[f64; 2]], states: &[RobotPose]) -> f64 {
    let xs: f64 = states.iter().zip(&problem.x_ref).map(|(x, r)| state_cost(x, r, &cfg.q)).sum();
    let us: f64 = inputs.iter().zip(&problem.u_ref).map(|(u, r)| input_cost(u, r, &cfg.r)).sum();
    xs + us
}

/// Tracking plus input-deviation cost of a decision vector.
pub fn cost(problem: &OcpProblem, cfg: &OcpConfig, w: &[f64]) -> Result<f64, NmpcError> {
    let np = problem.horizon();
    let expected = 2 * np + 3 * (np + 1);
    if w.len() != expected {
        return Err(NmpcError::DimensionMismatch { expected, got: w.len() });
    }
    let inputs: Vec<[f64; 2]> = w[..2 * np].chunks_exact(2).map(|c| [c[0], c[1]]).collect();
    let states: Vec<RobotPose> = w[2 * np..]
        .chunks_exact(3)
        .map(|c| RobotPose { x: c[0], y: c[1], theta: c[2] })
        .collect();
    Ok(trajectory_cost(problem, cfg, &inputs, &states))
}

/// Largest shooting defect, including the initial-state defect.
pub fn defect_norm(problem: &OcpProblem, cfg: &OcpConfig, inputs: &[[f64; 2]], states: &[RobotPose]) -> f64 {
    let diff = |a: &RobotPose, b: &RobotPose| {
        (a.x - b.x)
            .abs()
            .max((a.y - b.y).abs())
            .max(wrap_angle(a.theta - b.theta).abs())
    };
    let mut worst = diff(&states[0], &problem.initial);
    for (k, u) in inputs.iter().enumerate() {
        worst = worst.max(diff(&predict(&states[k], *u, cfg.ts), &states[k + 1]));
    }
    worst
}

/// Diagnostics of one receding-horizon step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmpcStep {
    pub velocity: BodyVelocity,
    pub cost: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub defect_norm: f64,
    pub status: SolveStatus,
}

/// Receding-horizon NMPC for one robot. Holds the previous solution for warm
/// starts, so one instance serves exactly one control loop.
#[derive(Debug, Clone)]
pub struct NmpcController {
    config: OcpConfig,
    previous: Option<OcpSolution>,
}

impl NmpcController {
    pub fn new(config: OcpConfig) -> Result<Self, NmpcError> {
        config.validate()?;
        Ok(NmpcController { config, previous: None })
    }

    pub fn config(&self) -> &OcpConfig {
        &self.config
    }

    pub fn last_solution(&self) -> Option<&OcpSolution> {
        self.previous.as_ref()
    }

    pub fn reset(&mut self) {
        self.previous = None;
    }

    /// Solves the window at sample `k` from `robot` and returns the global
    /// velocity command built from the first optimal input.
    pub fn command(&mut self, robot: &RobotPose, trajectory: &ReferenceTrajectory, k: usize) -> Result<NmpcStep, NmpcError> {
        let problem = OcpProblem::from_trajectory(trajectory, k, *robot, self.config.horizon)?;
        let warm = match (&self.previous, self.config.warm_start) {
            (Some(prev), true) => Some(prev.shifted_inputs()),
            _ => None,
        };
        let sol = sqp::solve_from(&problem, &self.config, warm.as_deref())?;
        let u0 = sol.inputs[0];
        let psi = predict(robot, u0, self.config.ts).theta;
        let step = NmpcStep {
            velocity: BodyVelocity::new(u0[0] * psi.cos(), u0[0] * psi.sin(), u0[1]),
            cost: sol.cost,
            iterations: sol.iterations,
            kkt_residual: sol.kkt_residual,
            defect_norm: sol.defect_norm,
            status: sol.status,
        };
        self.previous = Some(sol);
        Ok(step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn predict_examples() {
        let p = predict(&RobotPose::default(), [1.0, 0.0], 0.1);
        assert_eq!((p.x, p.y, p.theta), (0.1, 0.0, 0.0));
        let p = predict(&RobotPose::new(0.0, 0.0, FRAC_PI_2), [1.0, 0.0], 0.1);
        assert!(p.x.abs() < 1e-17 && (p.y - 0.1).abs() < 1e-17 && p.theta == FRAC_PI_2);
        let p = predict(&RobotPose::default(), [0.0, 1.0], 0.1);
        assert_eq!((p.x, p.y, p.theta), (0.0, 0.0, 0.1));
    }

    fn straight_problem(np: usize) -> OcpProblem {
        let x_ref = (0..=np).map(|k| RobotPose::new(0.1 * k as f64, 0.0, 0.0)).collect();
        OcpProblem::new(RobotPose::default(), x_ref, vec![[1.0, 0.0]; np]).unwrap()
    }

    #[test]
    fn cost_of_reference_is_zero() {
        let cfg = OcpConfig::with_horizon(3);
        let p = straight_problem(3);
        let mut w = vec![];
        for u in p.u_ref() {
            w.extend_from_slice(u);
        }
        for x in p.x_ref() {
            w.extend_from_slice(&[x.x, x.y, x.theta]);
        }
        assert_eq!(cost(&p, &cfg, &w).unwrap(), 0.0);
        w[2 * 3 + 3] += 0.1;
        assert!((cost(&p, &cfg, &w).unwrap() - 0.15).abs() < 1e-12);
        assert_eq!(
            cost(&p, &cfg, &w[1..]),
            Err(NmpcError::DimensionMismatch { expected: 18, got: 17 })
        );
    }

    #[test]
    fn cost_wraps_heading() {
        let cfg = OcpConfig::with_horizon(1);
        let p = OcpProblem::new(
            RobotPose::new(0.0, 0.0, 3.1),
            vec![RobotPose::new(0.0, 0.0, -3.1); 2],
            vec![[0.0, 0.0]],
        )
        .unwrap();
        let w = [0.0, 0.0, 0.0, 0.0, 3.1, 0.0, 0.0, 3.1];
        let e = 2.0 * std::f64::consts::PI - 6.2;
        assert!((cost(&p, &cfg, &w).unwrap() - 2.0 * 15.0 * e * e).abs() < 1e-12);
    }

    #[test]
    fn padded_window_holds_final_pose() {
        let traj = ReferenceTrajectory::constant(RobotPose::new(1.0, 2.0, 0.5), 3, 0.1).unwrap();
        let p = OcpProblem::from_trajectory(&traj, 2, RobotPose::default(), 4).unwrap();
        assert_eq!(p.x_ref().len(), 5);
        assert!(p.x_ref().iter().all(|x| *x == RobotPose::new(1.0, 2.0, 0.5)));
        assert!(p.u_ref().iter().all(|u| *u == [0.0, 0.0]));
    }

    #[test]
    fn config_rejects_zero_horizon() {
        assert!(OcpConfig::with_horizon(0).validate().is_err());
        assert!(NmpcController::new(OcpConfig::with_horizon(0)).is_err());
    }
}
