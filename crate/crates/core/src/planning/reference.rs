use std::fmt::Write as _;

use super::bspline::{adaptive_gauss_legendre, SmoothPath, ARC_TOL};
use super::PlanningError;
use crate::angle::wrap_angle;
use crate::kinematics::RobotPose;

pub const TRAJECTORY_CSV_HEADER: &str = "n,t,x_ref,y_ref,theta_ref,v_ref,omega_ref";

/// Timestamped reference poses and speeds sampled every `ts` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    ts: f64,
    poses: Vec<RobotPose>,
    v_ref: Vec<f64>,
    omega_ref: Vec<f64>,
}

impl ReferenceTrajectory {
    pub fn new(
        ts: f64,
        poses: Vec<RobotPose>,
        v_ref: Vec<f64>,
        omega_ref: Vec<f64>,
    ) -> Result<Self, PlanningError> {
        let bad = |msg: &str| PlanningError::InvalidGrid(format!("reference trajectory: {msg}"));
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(bad("sample period must be positive"));
        }
        if poses.len() < 2 {
            return Err(bad("needs at least two samples"));
        }
        if v_ref.len() != poses.len() || omega_ref.len() != poses.len() {
            return Err(bad("pose and velocity lengths differ"));
        }
        if v_ref.iter().any(|v| !(*v >= 0.0)) {
            return Err(bad("reference speeds must be non-negative"));
        }
        let poses = poses
            .into_iter()
            .map(|p| RobotPose::new(p.x, p.y, p.theta))
            .collect();
        Ok(ReferenceTrajectory {
            ts,
            poses,
            v_ref,
            omega_ref,
        })
    }

    /// A setpoint held for `samples` steps with zero reference speeds.
    pub fn constant(pose: RobotPose, samples: usize, ts: f64) -> Result<Self, PlanningError> {
        Self::new(ts, vec![pose; samples], vec![0.0; samples], vec![0.0; samples])
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn poses(&self) -> &[RobotPose] {
        &self.poses
    }

    pub fn v_ref(&self) -> &[f64] {
        &self.v_ref
    }

    pub fn omega_ref(&self) -> &[f64] {
        &self.omega_ref
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.ts
    }

    pub fn duration(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// Reference pose at step `n`; past the end the final pose is held.
    pub fn pose_at(&self, n: usize) -> RobotPose {
        self.poses[n.min(self.len() - 1)]
    }

    /// Reference `(v, ω)` at step `n`; zero past the end.
    pub fn input_at(&self, n: usize) -> [f64; 2] {
        if n < self.len() {
            [self.v_ref[n], self.omega_ref[n]]
        } else {
            [0.0, 0.0]
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(TRAJECTORY_CSV_HEADER);
        s.push('\n');
        for (n, p) in self.poses.iter().enumerate() {
            writeln!(
                s,
                "{},{},{},{},{},{},{}",
                n,
                self.time(n),
                p.x,
                p.y,
                p.theta,
                self.v_ref[n],
                self.omega_ref[n]
            )
            .unwrap();
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, PlanningError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == TRAJECTORY_CSV_HEADER => {}
            _ => {
                return Err(PlanningError::TrajectoryParse {
                    line: 1,
                    msg: format!("expected header `{TRAJECTORY_CSV_HEADER}`"),
                })
            }
        }
        let (mut t_prev, mut ts) = (None, None);
        let (mut poses, mut v, mut w) = (Vec::new(), Vec::new(), Vec::new());
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| PlanningError::TrajectoryParse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if vals.len() != 7 {
                return Err(PlanningError::TrajectoryParse {
                    line: i + 1,
                    msg: format!("expected 7 fields, got {}", vals.len()),
                });
            }
            if let (Some(prev), None) = (t_prev, ts) {
                ts = Some(vals[1] - prev);
            }
            t_prev = Some(vals[1]);
            poses.push(RobotPose::new(vals[2], vals[3], vals[4]));
            v.push(vals[5]);
            w.push(vals[6]);
        }
        Self::new(ts.unwrap_or(0.0), poses, v, w)
    }
}

/// Samples `floor(T/ts) + 1` waypoints equally spaced in arc length along the
/// curve, then derives heading from successive displacements, speed from
/// their length, and yaw rate from wrapped heading differences. The first
/// sample has no predecessor: it copies heading and speed from sample 1 and
/// gets zero yaw rate.
pub fn sample_reference(
    curve: &SmoothPath,
    total_time: f64,
    ts: f64,
) -> Result<ReferenceTrajectory, PlanningError> {
    if !(ts > 0.0 && total_time > ts && total_time.is_finite()) {
        return Err(PlanningError::InvalidTiming { total_time, ts });
    }
    let n = (total_time / ts + 1e-9).floor() as usize + 1;

    let mut breaks = vec![0.0];
    breaks.extend(curve.interior_knots());
    breaks.push(1.0);
    let mut cumulative = vec![0.0];
    for w in breaks.windows(2) {
        let len = curve.arc_length_between(w[0], w[1]);
        cumulative.push(cumulative.last().unwrap() + len);
    }
    let total = *cumulative.last().unwrap();
    if total < 1e-9 {
        return Err(PlanningError::DegenerateCurve);
    }

    let points: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            if i == n - 1 {
                return curve.point(1.0);
            }
            let s = total * i as f64 / (n - 1) as f64;
            let span = cumulative.partition_point(|c| *c <= s).saturating_sub(1).min(breaks.len() - 2);
            let u = invert_arc_length(curve, breaks[span], breaks[span + 1], s - cumulative[span]);
            curve.point(u)
        })
        .collect();

    let mut theta = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut omega = vec![0.0; n];
    for i in 1..n {
        let dx = points[i][0] - points[i - 1][0];
        let dy = points[i][1] - points[i - 1][1];
        theta[i] = wrap_angle(dy.atan2(dx));
        v[i] = dx.hypot(dy) / ts;
    }
    theta[0] = theta[1];
    v[0] = v[1];
    for i in 1..n {
        omega[i] = wrap_angle(theta[i] - theta[i - 1]) / ts;
    }

    let poses = points
        .iter()
        .zip(&theta)
        .map(|(p, th)| RobotPose::new(p[0], p[1], *th))
        .collect();
    ReferenceTrajectory::new(ts, poses, v, omega)
}

/// Parameter `u` in `[a, b]` whose arc length from `a` equals `target`, by
/// bisection.
fn invert_arc_length(curve: &SmoothPath, a: f64, b: f64, target: f64) -> f64 {
    if target <= 0.0 {
        return a;
    }
    let (mut lo, mut hi) = (a, b);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let len = adaptive_gauss_legendre(&|u| curve.speed(u), a, mid, ARC_TOL, 0);
        if (len - target).abs() < 1e-12 {
            return mid;
        }
        if len < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}
