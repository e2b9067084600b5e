//! Grid path planning and reference-trajectory generation.
//!
//! The pipeline is `OccupancyGrid` → [`astar`] → [`smooth`] →
//! [`sample_reference`]: a 4-connected unit-cost A* search, a clamped cubic
//! B-spline through every path cell, and uniform arc-length sampling into a
//! timestamped reference with heading and speed references.

mod astar;
mod bspline;
mod grid;
mod reference;

pub use astar::{astar, astar_with_stats, SearchStats};
pub use bspline::{smooth, SmoothPath};
pub use grid::{Cell, GridPath, OccupancyGrid};
pub use reference::{sample_reference, ReferenceTrajectory, TRAJECTORY_CSV_HEADER};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanningError {
    #[error("no path found from {start} to {goal}")]
    NoPath { start: Cell, goal: Cell },
    #[error("cell {0} is occupied or outside the grid")]
    InvalidCell(Cell),
    #[error("a B-spline needs at least 4 control points, got {0}")]
    TooFewPoints(usize),
    #[error("curve arc length is zero")]
    DegenerateCurve,
    #[error("invalid timing: total time {total_time} s with sample period {ts} s")]
    InvalidTiming { total_time: f64, ts: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("map parse error on line {line}: {msg}")]
    MapParse { line: usize, msg: String },
    #[error("trajectory parse error on line {line}: {msg}")]
    TrajectoryParse { line: usize, msg: String },
}
