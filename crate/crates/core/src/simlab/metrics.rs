use serde::Serialize;

use super::{SimError, StepRecord};
use crate::angle::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackingMetrics {
    pub me_xy: f64,
    pub mae_theta: f64,
}

/// Mean XY distance and mean absolute wrapped heading error between the
/// reference and the true pose.
pub fn tracking_metrics(log: &[StepRecord]) -> Result<TrackingMetrics, SimError> {
    if log.is_empty() {
        return Err(SimError::InvalidSeries("empty log".into()));
    }
    let n = log.len() as f64;
    let me_xy = log.iter().map(|r| r.reference.distance_to(&r.truth)).sum::<f64>() / n;
    let mae_theta = log
        .iter()
        .map(|r| wrap_angle(r.reference.theta - r.truth.theta).abs())
        .sum::<f64>()
        / n;
    Ok(TrackingMetrics { me_xy, mae_theta })
}

/// Step-response characteristics. `None` marks a quantity the series never
/// reaches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepMetrics {
    pub overshoot_pct: f64,
    pub rise_time: Option<f64>,
    pub settling_time: Option<f64>,
}

/// Band around the target, as a fraction of the step size.
const SETTLING_BAND: f64 = 0.1;

/// Overshoot, 10 %→90 % rise time and ±10 % settling time of `(t, y)`
/// samples stepping from `y(0)` to `target`. Crossing times are linearly
/// interpolated between samples.
pub fn step_metrics(series: &[(f64, f64)], target: f64) -> Result<StepMetrics, SimError> {
    if series.len() < 2 {
        return Err(SimError::InvalidSeries(format!(
            "need at least two samples, got {}",
            series.len()
        )));
    }
    let y0 = series[0].1;
    let span = target - y0;
    if span == 0.0 || !span.is_finite() {
        return Err(SimError::InvalidSeries("target equals the initial value".into()));
    }
    // Normalised response: 0 at the start, 1 at the target.
    let s: Vec<(f64, f64)> = series.iter().map(|&(t, y)| (t, (y - y0) / span)).collect();

    let peak = s.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let overshoot_pct = ((peak - 1.0) * 100.0).max(0.0);

    let crossing = |level: f64| {
        s.windows(2).find_map(|w| {
            let ((t0, a), (t1, b)) = (w[0], w[1]);
            (a < level && b >= level).then(|| t0 + (t1 - t0) * (level - a) / (b - a))
        })
    };
    let rise_time = match (crossing(0.1), crossing(0.9)) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };

    let inside = |v: f64| (v - 1.0).abs() <= SETTLING_BAND;
    let settling_time = match s.iter().rposition(|p| !inside(p.1)) {
        None => Some(s[0].0),
        Some(last) if last + 1 == s.len() => None,
        Some(last) => {
            let ((t0, a), (t1, b)) = (s[last], s[last + 1]);
            // Entry point into the band between the last outside sample and
            // the first inside one.
            let edge = if a > 1.0 { 1.0 + SETTLING_BAND } else { 1.0 - SETTLING_BAND };
            Some(t0 + (t1 - t0) * (edge - a) / (b - a))
        }
    };
    Ok(StepMetrics {
        overshoot_pct,
        rise_time,
        settling_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{BodyVelocity, RobotPose, WheelSpeeds};

    fn record(reference: RobotPose, truth: RobotPose) -> StepRecord {
        StepRecord {
            n: 0,
            t: 0.0,
            reference,
            truth,
            measured: truth,
            command: BodyVelocity::default(),
            wheels: WheelSpeeds([0.0; 4]),
            diagnostics: None,
        }
    }

    #[test]
    fn tracking_examples() {
        let p = RobotPose::new(1.0, 2.0, 0.3);
        let m = tracking_metrics(&[record(p, p)]).unwrap();
        assert_eq!((m.me_xy, m.mae_theta), (0.0, 0.0));
        let o = RobotPose::default();
        let m = tracking_metrics(&[record(RobotPose::new(3.0, 4.0, 0.0), o); 2]).unwrap();
        assert_eq!(m.me_xy, 5.0);
        let m = tracking_metrics(&[
            record(RobotPose::new(0.0, 0.0, 0.1), o),
            record(RobotPose::new(0.0, 0.0, -0.1), o),
        ])
        .unwrap();
        assert!((m.mae_theta - 0.1).abs() < 1e-15);
        assert!(tracking_metrics(&[]).is_err());
    }

    fn sampled(f: impl Fn(f64) -> f64, dt: f64, t_end: f64) -> Vec<(f64, f64)> {
        let n = (t_end / dt).round() as usize;
        (0..=n).map(|i| (i as f64 * dt, f(i as f64 * dt))).collect()
    }

    #[test]
    fn first_order_response() {
        let m = step_metrics(&sampled(|t| 1.0 - (-t).exp(), 0.001, 20.0), 1.0).unwrap();
        assert_eq!(m.overshoot_pct, 0.0);
        assert!((m.rise_time.unwrap() - 9f64.ln()).abs() < 1e-5);
        assert!((m.settling_time.unwrap() - 10f64.ln()).abs() < 1e-5);
    }

    #[test]
    fn coarse_sampling_stays_within_one_sample() {
        let dt = 0.25;
        let m = step_metrics(&sampled(|t| 1.0 - (-t).exp(), dt, 20.0), 1.0).unwrap();
        assert!((m.rise_time.unwrap() - 9f64.ln()).abs() < dt);
    }

    #[test]
    fn damped_overshoot() {
        // Peak of 1.2 at t = 0 would be the start; shift so the peak is interior.
        let f = |t: f64| if t < 1.0 { 1.2 * t } else { 1.0 + 0.2 * (-(t - 1.0)).exp() * (5.0 * (t - 1.0)).cos() };
        let m = step_metrics(&sampled(f, 0.001, 20.0), 1.0).unwrap();
        assert!((m.overshoot_pct - 20.0).abs() < 1e-9);
    }

    #[test]
    fn downward_step_and_preconditions() {
        let m = step_metrics(&sampled(|t| -(1.0 - (-t).exp()), 0.001, 20.0), -1.0).unwrap();
        assert!((m.rise_time.unwrap() - 9f64.ln()).abs() < 1e-5);
        assert!(step_metrics(&[(0.0, 0.0), (1.0, 1.0)], 0.0).is_err());
        assert!(step_metrics(&[(0.0, 0.0)], 1.0).is_err());
        let m = step_metrics(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], 1.0).unwrap();
        assert_eq!((m.rise_time, m.settling_time), (None, None));
    }
}
