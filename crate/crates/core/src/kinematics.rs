//! Omni-wheel kinematics.
//!
//! Wheel `i` sits at offset angle `θ + αᵢ` around the body centre. Its angular
//! rate is `φ̇ᵢ = (−sin(θ+αᵢ)·ẋ + cos(θ+αᵢ)·ẏ + R·θ̇) / r`, which gives a 4×3
//! linear map from body twist to wheel rates. The forward map is its
//! Moore–Penrose least-squares inverse.

use nalgebra::{Matrix3, Matrix4x3, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};
use thiserror::Error;

use crate::angle::wrap_angle;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("body radius must be positive, got {0}")]
    BodyRadius(f64),
    #[error("wheel radius must be positive, got {0}")]
    WheelRadius(f64),
    #[error("wheel offset angles must be strictly increasing in [0, 2π)")]
    WheelAngles,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometryRepr", into = "GeometryRepr")]
pub struct OmniGeometry {
    body_radius: f64,
    wheel_radius: f64,
    wheel_angles: [f64; 4],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryRepr {
    #[serde(default = "default_body_radius")]
    body_radius: f64,
    #[serde(default = "default_wheel_radius")]
    wheel_radius: f64,
    #[serde(default = "default_wheel_angles")]
    wheel_angles: [f64; 4],
}

fn default_body_radius() -> f64 {
    0.2
}

fn default_wheel_radius() -> f64 {
    0.05
}

fn default_wheel_angles() -> [f64; 4] {
    [FRAC_PI_4, 3.0 * FRAC_PI_4, 5.0 * FRAC_PI_4, 7.0 * FRAC_PI_4]
}

impl TryFrom<GeometryRepr> for OmniGeometry {
    type Error = KinematicsError;

    fn try_from(r: GeometryRepr) -> Result<Self, Self::Error> {
        OmniGeometry::with_angles(r.body_radius, r.wheel_radius, r.wheel_angles)
    }
}

impl From<OmniGeometry> for GeometryRepr {
    fn from(g: OmniGeometry) -> Self {
        GeometryRepr {
            body_radius: g.body_radius,
            wheel_radius: g.wheel_radius,
            wheel_angles: g.wheel_angles,
        }
    }
}

impl Default for OmniGeometry {
    fn default() -> Self {
        OmniGeometry {
            body_radius: default_body_radius(),
            wheel_radius: default_wheel_radius(),
            wheel_angles: default_wheel_angles(),
        }
    }
}

impl OmniGeometry {
    /// Geometry with the standard wheel layout at π/4, 3π/4, 5π/4, 7π/4.
    pub fn new(body_radius: f64, wheel_radius: f64) -> Result<Self, KinematicsError> {
        Self::with_angles(body_radius, wheel_radius, default_wheel_angles())
    }

    pub fn with_angles(
        body_radius: f64,
        wheel_radius: f64,
        wheel_angles: [f64; 4],
    ) -> Result<Self, KinematicsError> {
        if !(body_radius > 0.0 && body_radius.is_finite()) {
            return Err(KinematicsError::BodyRadius(body_radius));
        }
        if !(wheel_radius > 0.0 && wheel_radius.is_finite()) {
            return Err(KinematicsError::WheelRadius(wheel_radius));
        }
        let in_range = wheel_angles.iter().all(|a| (0.0..2.0 * PI).contains(a));
        let increasing = wheel_angles.windows(2).all(|w| w[0] < w[1]);
        if !in_range || !increasing {
            return Err(KinematicsError::WheelAngles);
        }
        Ok(OmniGeometry {
            body_radius,
            wheel_radius,
            wheel_angles,
        })
    }

    pub fn body_radius(&self) -> f64 {
        self.body_radius
    }

    pub fn wheel_radius(&self) -> f64 {
        self.wheel_radius
    }

    pub fn wheel_angles(&self) -> [f64; 4] {
        self.wheel_angles
    }
}

/// Planar pose with heading kept in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl RobotPose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        RobotPose {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn distance_to(&self, other: &RobotPose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Twist `(ẋ, ẏ, θ̇)` expressed in the global frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl BodyVelocity {
    pub fn new(vx: f64, vy: f64, omega: f64) -> Self {
        BodyVelocity { vx, vy, omega }
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.omega.is_finite()
    }

    fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.vx, self.vy, self.omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelSpeeds(pub [f64; 4]);

impl WheelSpeeds {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|w| w.is_finite())
    }
}

/// Row `i` is `(1/r)·[−sin(θ+αᵢ), cos(θ+αᵢ), R]`.
pub fn wheel_matrix(geom: &OmniGeometry) -> Matrix4x3<f64> {
    let inv_r = 1.0 / geom.wheel_radius;
    Matrix4x3::from_fn(|i, j| {
        let a = geom.wheel_angles[i];
        inv_r
            * match j {
                0 => -a.sin(),
                1 => a.cos(),
                _ => geom.body_radius,
            }
    })
}

pub fn inverse_kinematics(geom: &OmniGeometry, v: &BodyVelocity) -> WheelSpeeds {
    let w = wheel_matrix(geom) * v.as_vector();
    WheelSpeeds([w[0], w[1], w[2], w[3]])
}

/// Least-squares body twist for the given wheel rates, `(MᵀM)⁻¹Mᵀw`.
pub fn forward_kinematics(geom: &OmniGeometry, w: &WheelSpeeds) -> BodyVelocity {
    let m = wheel_matrix(geom);
    let mtm: Matrix3<f64> = m.transpose() * m;
    let rhs = m.transpose() * Vector4::from(w.0);
    // The four wheel directions span the plane and R > 0, so MᵀM is SPD.
    let v = mtm
        .cholesky()
        .expect("wheel matrix has full column rank")
        .solve(&rhs);
    BodyVelocity::new(v[0], v[1], v[2])
}

/// Forward-Euler pose update under a global-frame twist.
pub fn integrate_pose(p: &RobotPose, v: &BodyVelocity, dt: f64) -> RobotPose {
    RobotPose::new(p.x + v.vx * dt, p.y + v.vy * dt, p.theta + v.omega * dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geom() -> OmniGeometry {
        OmniGeometry::new(0.2, 0.05).unwrap()
    }

    #[test]
    fn matrix_first_row() {
        let m = wheel_matrix(&geom());
        let s = FRAC_PI_4.sin() / 0.05;
        assert!((m[(0, 0)] + s).abs() < 1e-12);
        assert!((m[(0, 1)] - s).abs() < 1e-12);
        assert!((m[(0, 2)] - 4.0).abs() < 1e-12);
        assert_eq!(m.rank(1e-9), 3);
    }

    #[test]
    fn doubling_wheel_radius_halves_entries() {
        let a = wheel_matrix(&geom());
        let b = wheel_matrix(&OmniGeometry::new(0.2, 0.1).unwrap());
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x / 2.0 - y).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_rotation_and_translation() {
        let w = inverse_kinematics(&geom(), &BodyVelocity::new(0.0, 0.0, 1.0));
        assert_eq!(w.0, [4.0; 4]);
        let w = inverse_kinematics(&geom(), &BodyVelocity::default());
        assert_eq!(w.0, [0.0; 4]);
        let w = inverse_kinematics(&geom(), &BodyVelocity::new(1.0, 0.0, 0.0));
        let s = FRAC_PI_4.sin() / 0.05;
        let expected = [-s, -s, s, s];
        for (a, b) in w.0.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn forward_examples() {
        let g = geom();
        let v = forward_kinematics(&g, &WheelSpeeds([4.0; 4]));
        assert!((v.vx).abs() < 1e-12 && v.vy.abs() < 1e-12 && (v.omega - 1.0).abs() < 1e-12);
        let v = forward_kinematics(&g, &WheelSpeeds([0.0; 4]));
        assert_eq!(v, BodyVelocity::default());
        let v0 = BodyVelocity::new(0.7, -0.3, 1.1);
        let v = forward_kinematics(&g, &inverse_kinematics(&g, &v0));
        assert!((v.vx - v0.vx).abs() < 1e-9);
        assert!((v.vy - v0.vy).abs() < 1e-9);
        assert!((v.omega - v0.omega).abs() < 1e-9);
    }

    #[test]
    fn integrate_examples() {
        let p = integrate_pose(&RobotPose::default(), &BodyVelocity::new(1.0, 0.0, 0.0), 0.1);
        assert!((p.x - 0.1).abs() < 1e-15 && p.y == 0.0 && p.theta == 0.0);

        let p = integrate_pose(
            &RobotPose::new(0.0, 0.0, PI - 0.05),
            &BodyVelocity::new(0.0, 0.0, 1.0),
            0.1,
        );
        assert!((p.theta - (-PI + 0.05)).abs() < 1e-12);

        let start = RobotPose::new(1.0, -2.0, 0.5);
        let mut p = start;
        for _ in 0..300 {
            p = integrate_pose(&p, &BodyVelocity::default(), 0.1);
        }
        assert_eq!(p, start);
    }

    #[test]
    fn invalid_geometry() {
        assert!(OmniGeometry::new(0.0, 0.05).is_err());
        assert!(OmniGeometry::new(0.2, -1.0).is_err());
        assert!(OmniGeometry::with_angles(0.2, 0.05, [0.0, 2.0, 1.0, 3.0]).is_err());
        assert!(OmniGeometry::with_angles(0.2, 0.05, [0.0, 1.0, 2.0, 7.0]).is_err());
    }

    proptest! {
        #[test]
        fn inverse_is_linear(
            a in -2.0f64..2.0, b in -2.0f64..2.0,
            v1 in prop::array::uniform3(-2.0f64..2.0),
            v2 in prop::array::uniform3(-2.0f64..2.0),
        ) {
            let g = geom();
            let bv1 = BodyVelocity::new(v1[0], v1[1], v1[2]);
            let bv2 = BodyVelocity::new(v2[0], v2[1], v2[2]);
            let combo = BodyVelocity::new(
                a * v1[0] + b * v2[0],
                a * v1[1] + b * v2[1],
                a * v1[2] + b * v2[2],
            );
            let lhs = inverse_kinematics(&g, &combo);
            let w1 = inverse_kinematics(&g, &bv1);
            let w2 = inverse_kinematics(&g, &bv2);
            for i in 0..4 {
                prop_assert!((lhs.0[i] - (a * w1.0[i] + b * w2.0[i])).abs() < 1e-9);
            }
        }

        #[test]
        fn integrate_keeps_heading_wrapped(
            theta in -3.14f64..3.14, omega in -50.0f64..50.0, dt in 0.001f64..1.0
        ) {
            let p = integrate_pose(&RobotPose::new(0.0, 0.0, theta), &BodyVelocity::new(0.0, 0.0, omega), dt);
            prop_assert!(p.theta > -PI && p.theta <= PI);
        }
    }
}
