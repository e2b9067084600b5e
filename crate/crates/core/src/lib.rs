//! Trajectory planning and tracking control for a four-wheel omni-drive robot.
//!
//! The crate is organised bottom-up:
//!
//! - [`kinematics`]: wheel/body velocity maps and pose integration.
//! - [`planning`]: occupancy grids, A*, clamped cubic B-splines and
//!   reference-trajectory sampling.
//! - [`fuzzy`]: Mamdani inference in Type-1 and Interval Type-2 flavours.
//! - [`fpid`]: the self-tuning fuzzy PID tracking controller.
//! - [`nmpc`]: multiple-shooting nonlinear MPC with an in-house SQP solver.
//! - [`simlab`]: kinematic plant, noise injection, episodes and metrics.
//! - [`experiment`]: config-driven experiment runners and CSV output used by
//!   the command-line front end.

pub mod angle;
pub mod experiment;
pub mod fpid;
pub mod fuzzy;
pub mod kinematics;
pub mod nmpc;
pub mod planning;
pub mod simlab;

pub use angle::wrap_angle;
pub use kinematics::{BodyVelocity, OmniGeometry, RobotPose, WheelSpeeds};
