//! Self-tuning fuzzy PID trajectory tracking.
//!
//! Two independent loops run every step: a distance loop on `dr` producing
//! the linear speed and a heading loop on `e_θ` producing the yaw rate. Each
//! loop normalises its error and error change into `[-1, 1]`, asks a
//! [`GainTuner`] for gain increments, accumulates them into its gains and
//! then evaluates a textbook PID law.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::angle::wrap_angle;
use crate::fuzzy::{FouParams, FuzzyError, GainTuner, It2Engine, T1Engine, TypeReduction};
use crate::kinematics::{BodyVelocity, RobotPose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    #[default]
    T1,
    It2,
}

/// Frame in which `[v cos dα, v sin dα]` is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandFrame {
    /// `dα` is relative to the robot heading; rotate by `θ` into the world.
    #[default]
    Body,
    /// Use the vector as a world-frame velocity unchanged.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

/// Tunables of one loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidLoopConfig {
    pub initial: PidGains,
    pub k_max: f64,
    pub i_max: f64,
    pub norm_scale: f64,
    pub de_scale: f64,
}

/// Controller configuration, flat so it reads well as a config section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpidConfig {
    pub engine: EngineKind,
    pub distance_kp: f64,
    pub distance_ki: f64,
    pub distance_kd: f64,
    pub heading_kp: f64,
    pub heading_ki: f64,
    pub heading_kd: f64,
    pub k_max: f64,
    pub i_max: f64,
    /// Distance error mapped to `e = 1` (m).
    pub distance_norm: f64,
    /// Heading error mapped to `e = 1` (rad).
    pub heading_norm: f64,
    pub de_scale: f64,
    /// Distance below which the target counts as reached (m).
    pub threshold: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub frame: CommandFrame,
    /// Samples ahead of the current one taken as the tracking target.
    pub lookahead: usize,
    pub fou_height_scale: f64,
    pub fou_lag: f64,
    pub type_reduction: TypeReduction,
}

impl Default for FpidConfig {
    fn default() -> Self {
        FpidConfig {
            engine: EngineKind::T1,
            distance_kp: 1.0,
            distance_ki: 0.0,
            distance_kd: 0.1,
            heading_kp: 2.0,
            heading_ki: 0.0,
            heading_kd: 0.1,
            k_max: 10.0,
            i_max: 1.0,
            distance_norm: 1.0,
            heading_norm: std::f64::consts::PI,
            de_scale: 10.0,
            threshold: 0.01,
            v_max: 1.5,
            omega_max: 3.14,
            frame: CommandFrame::Body,
            lookahead: 1,
            fou_height_scale: 1.0,
            fou_lag: 0.3,
            type_reduction: TypeReduction::Centroid,
        }
    }
}

impl FpidConfig {
    pub fn with_engine(engine: EngineKind) -> Self {
        FpidConfig {
            engine,
            ..Default::default()
        }
    }

    pub fn distance_loop(&self) -> PidLoopConfig {
        PidLoopConfig {
            initial: PidGains {
                kp: self.distance_kp,
                ki: self.distance_ki,
                kd: self.distance_kd,
            },
            k_max: self.k_max,
            i_max: self.i_max,
            norm_scale: self.distance_norm,
            de_scale: self.de_scale,
        }
    }

    pub fn heading_loop(&self) -> PidLoopConfig {
        PidLoopConfig {
            initial: PidGains {
                kp: self.heading_kp,
                ki: self.heading_ki,
                kd: self.heading_kd,
            },
            k_max: self.k_max,
            i_max: self.i_max,
            norm_scale: self.heading_norm,
            de_scale: self.de_scale,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("k_max", self.k_max),
            ("i_max", self.i_max),
            ("distance_norm", self.distance_norm),
            ("heading_norm", self.heading_norm),
            ("de_scale", self.de_scale),
            ("v_max", self.v_max),
            ("omega_max", self.omega_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.threshold >= 0.0) {
            return Err(format!("threshold must be non-negative, got {}", self.threshold));
        }
        let gains = [
            self.distance_kp,
            self.distance_ki,
            self.distance_kd,
            self.heading_kp,
            self.heading_ki,
            self.heading_kd,
        ];
        if gains.iter().any(|g| !(0.0..=self.k_max).contains(g)) {
            return Err("initial gains must lie in [0, k_max]".into());
        }
        Ok(())
    }

    /// The gain tuner selected by `engine`.
    pub fn build_tuner(&self) -> Result<Arc<dyn GainTuner>, FuzzyError> {
        Ok(match self.engine {
            EngineKind::T1 => Arc::new(T1Engine::standard()),
            EngineKind::It2 => Arc::new(It2Engine::standard(
                FouParams {
                    height_scale: self.fou_height_scale,
                    lag: self.fou_lag,
                },
                self.type_reduction,
            )?),
        })
    }
}

/// Distance and heading errors of the robot with respect to a target pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackError {
    pub dr: f64,
    pub d_alpha: f64,
    pub e_theta: f64,
    pub e_x: f64,
    pub e_y: f64,
}

/// `dα` is the bearing of the target relative to the robot heading, taken as
/// zero when the target is closer than `threshold`.
pub fn compute_errors(robot: &RobotPose, target: &RobotPose, threshold: f64) -> TrackError {
    let e_x = target.x - robot.x;
    let e_y = target.y - robot.y;
    let dr = e_x.hypot(e_y);
    let d_alpha = if dr < threshold || dr == 0.0 {
        0.0
    } else {
        wrap_angle(e_y.atan2(e_x) - robot.theta)
    };
    TrackError {
        dr,
        d_alpha,
        e_theta: wrap_angle(target.theta - robot.theta),
        e_x,
        e_y,
    }
}

/// Mutable state of one fuzzy PID loop.
#[derive(Debug, Clone, PartialEq)]
pub struct PidState {
    gains: PidGains,
    integral: f64,
    prev_error: Option<f64>,
}

impl PidState {
    pub fn new(cfg: &PidLoopConfig) -> Self {
        PidState {
            gains: cfg.initial,
            integral: 0.0,
            prev_error: None,
        }
    }

    pub fn gains(&self) -> PidGains {
        self.gains
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn prev_error(&self) -> Option<f64> {
        self.prev_error
    }

    /// One control update. The first call has no previous error and uses a
    /// zero error change.
    pub fn step(
        &mut self,
        tuner: &dyn GainTuner,
        cfg: &PidLoopConfig,
        error: f64,
        dt: f64,
    ) -> Result<f64, FuzzyError> {
        debug_assert!(dt > 0.0 && cfg.norm_scale > 0.0);
        let de = match self.prev_error {
            Some(prev) => (error - prev) / dt,
            None => 0.0,
        };
        let e_n = (error / cfg.norm_scale).clamp(-1.0, 1.0);
        let de_n = (de / (cfg.norm_scale * cfg.de_scale)).clamp(-1.0, 1.0);
        let delta = tuner.infer(e_n, de_n)?;
        let g = &mut self.gains;
        g.kp = (g.kp + delta.kp).clamp(0.0, cfg.k_max);
        g.ki = (g.ki + delta.ki).clamp(0.0, cfg.k_max);
        g.kd = (g.kd + delta.kd).clamp(0.0, cfg.k_max);
        self.integral = (self.integral + error * dt).clamp(-cfg.i_max, cfg.i_max);
        self.prev_error = Some(error);
        Ok(g.kp * error + g.ki * self.integral + g.kd * de)
    }
}

/// Fuzzy PID tracking controller for one robot.
pub struct FpidController {
    config: FpidConfig,
    tuner: Arc<dyn GainTuner>,
    distance_cfg: PidLoopConfig,
    heading_cfg: PidLoopConfig,
    distance: PidState,
    heading: PidState,
}

impl FpidController {
    pub fn new(config: FpidConfig) -> Result<Self, FuzzyError> {
        let tuner = config.build_tuner()?;
        Ok(Self::with_tuner(config, tuner))
    }

    pub fn with_tuner(config: FpidConfig, tuner: Arc<dyn GainTuner>) -> Self {
        let distance_cfg = config.distance_loop();
        let heading_cfg = config.heading_loop();
        FpidController {
            distance: PidState::new(&distance_cfg),
            heading: PidState::new(&heading_cfg),
            config,
            tuner,
            distance_cfg,
            heading_cfg,
        }
    }

    pub fn config(&self) -> &FpidConfig {
        &self.config
    }

    pub fn distance_state(&self) -> &PidState {
        &self.distance
    }

    pub fn heading_state(&self) -> &PidState {
        &self.heading
    }

    /// World-frame velocity command toward `target`.
    pub fn command(&mut self, robot: &RobotPose, target: &RobotPose, dt: f64) -> Result<BodyVelocity, FuzzyError> {
        let err = compute_errors(robot, target, self.config.threshold);
        let v = self.distance.step(self.tuner.as_ref(), &self.distance_cfg, err.dr, dt)?;
        let omega = self.heading.step(self.tuner.as_ref(), &self.heading_cfg, err.e_theta, dt)?;
        let v = if err.dr < self.config.threshold {
            0.0
        } else {
            v.clamp(0.0, self.config.v_max)
        };
        let omega = omega.clamp(-self.config.omega_max, self.config.omega_max);
        let direction = match self.config.frame {
            CommandFrame::Body => err.d_alpha + robot.theta,
            CommandFrame::Global => err.d_alpha,
        };
        Ok(BodyVelocity::new(v * direction.cos(), v * direction.sin(), omega))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{GainDelta, ZeroTuner};
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    #[test]
    fn error_examples() {
        let e = compute_errors(&RobotPose::new(0.0, 0.0, 0.0), &RobotPose::new(1.0, 1.0, FRAC_PI_4), 0.01);
        assert!((e.dr - SQRT_2).abs() < 1e-15);
        assert!((e.d_alpha - FRAC_PI_4).abs() < 1e-15);
        assert!((e.e_theta - FRAC_PI_4).abs() < 1e-15);

        let p = RobotPose::new(0.3, -0.2, 1.0);
        let e = compute_errors(&p, &p, 0.01);
        assert_eq!((e.dr, e.d_alpha, e.e_theta), (0.0, 0.0, 0.0));

        let e = compute_errors(&RobotPose::new(0.0, 0.0, 3.0), &RobotPose::new(-1.0, 0.0, -3.0), 0.01);
        assert!((e.e_theta - (2.0 * std::f64::consts::PI - 6.0)).abs() < 1e-12);
        assert!((e.e_theta - 0.2832).abs() < 1e-4);
    }

    #[test]
    fn zero_error_moves_gains_by_zero_rule_only() {
        let tuner = T1Engine::standard();
        let zz = tuner.infer(0.0, 0.0).unwrap();
        let cfg = PidLoopConfig {
            initial: PidGains { kp: 0.0, ki: 0.0, kd: 0.5 },
            k_max: 10.0,
            i_max: 1.0,
            norm_scale: 1.0,
            de_scale: 10.0,
        };
        let mut s = PidState::new(&cfg);
        for _ in 0..3 {
            let before = s.gains();
            let out = s.step(&tuner, &cfg, 0.0, 0.1).unwrap();
            assert_eq!(out, 0.0);
            let after = s.gains();
            assert!((after.kp - (before.kp + zz.kp).clamp(0.0, 10.0)).abs() < 1e-15);
            assert!((after.ki - (before.ki + zz.ki).clamp(0.0, 10.0)).abs() < 1e-15);
            assert!((after.kd - (before.kd + zz.kd).clamp(0.0, 10.0)).abs() < 1e-15);
        }
    }

    struct Recording(std::sync::Mutex<Vec<(f64, f64)>>, GainDelta);

    impl GainTuner for Recording {
        fn infer(&self, e: f64, de: f64) -> Result<GainDelta, FuzzyError> {
            self.0.lock().unwrap().push((e, de));
            Ok(self.1)
        }
    }

    #[test]
    fn constant_error_has_zero_change() {
        let rec = Recording(Default::default(), GainDelta::default());
        let cfg = FpidConfig::default().distance_loop();
        let mut s = PidState::new(&cfg);
        s.step(&rec, &cfg, 0.4, 0.1).unwrap();
        s.step(&rec, &cfg, 0.4, 0.1).unwrap();
        let calls = rec.0.lock().unwrap();
        assert_eq!(calls[1], (0.4, 0.0));
    }

    #[test]
    fn gains_clamp_at_k_max() {
        let up = Recording(Default::default(), GainDelta { kp: 0.1, ki: 0.1, kd: 0.1 });
        let cfg = PidLoopConfig {
            initial: PidGains { kp: 10.0, ki: 10.0, kd: 10.0 },
            k_max: 10.0,
            i_max: 1.0,
            norm_scale: 1.0,
            de_scale: 10.0,
        };
        let mut s = PidState::new(&cfg);
        s.step(&up, &cfg, 0.2, 0.1).unwrap();
        assert_eq!(s.gains(), PidGains { kp: 10.0, ki: 10.0, kd: 10.0 });
    }

    #[test]
    fn at_target_commands_nothing() {
        let mut c = FpidController::new(FpidConfig::default()).unwrap();
        let p = RobotPose::new(1.0, 2.0, 0.3);
        assert_eq!(c.command(&p, &p, 0.1).unwrap(), BodyVelocity::default());
    }

    #[test]
    fn target_ahead_has_no_lateral_component() {
        let mut c = FpidController::new(FpidConfig::default()).unwrap();
        let v = c.command(&RobotPose::default(), &RobotPose::new(0.5, 0.0, 0.0), 0.1).unwrap();
        assert!(v.vx > 0.0);
        assert_eq!(v.vy, 0.0);
        assert_eq!(v.omega, 0.0);
    }

    #[test]
    fn body_and_global_frames() {
        let robot = RobotPose::new(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let target = RobotPose::new(1.0, 0.0, std::f64::consts::FRAC_PI_2);
        let mut body = FpidController::new(FpidConfig::default()).unwrap();
        let v = body.command(&robot, &target, 0.1).unwrap();
        assert!(v.vx > 0.0 && v.vy.abs() < 1e-12);
        let mut global = FpidController::new(FpidConfig {
            frame: CommandFrame::Global,
            ..Default::default()
        })
        .unwrap();
        let v = global.command(&robot, &target, 0.1).unwrap();
        // dα = -π/2 used as a world direction
        assert!(v.vy < 0.0 && v.vx.abs() < 1e-12);
    }

    #[test]
    fn zero_tuner_is_fixed_gain_pid() {
        let cfg = FpidConfig::default();
        let mut c = FpidController::with_tuner(cfg.clone(), Arc::new(ZeroTuner));
        let target = RobotPose::new(0.5, 0.2, 0.4);
        let dt = 0.1;
        let (mut integ, mut prev) = (0.0, None::<f64>);
        let mut robot = RobotPose::default();
        for _ in 0..20 {
            let cmd = c.command(&robot, &target, dt).unwrap();
            let err = compute_errors(&robot, &target, cfg.threshold);
            integ = f64::clamp(integ + err.dr * dt, -cfg.i_max, cfg.i_max);
            let de = prev.map_or(0.0, |p| (err.dr - p) / dt);
            prev = Some(err.dr);
            let v = (cfg.distance_kp * err.dr + cfg.distance_ki * integ + cfg.distance_kd * de).clamp(0.0, cfg.v_max);
            assert!((cmd.speed() - v).abs() < 1e-12);
            assert_eq!(c.distance_state().gains().kp, cfg.distance_kp);
            robot = crate::kinematics::integrate_pose(&robot, &cmd, dt);
        }
    }
}
