//! Two-input Mamdani fuzzy inference producing PID gain increments.
//!
//! Inputs are the normalised error `e` and error change `de` on `[-1, 1]`;
//! outputs are `(Δkp, Δki, Δkd)` on `[-0.1, 0.1]`. Both variables use seven
//! triangular terms NB..PB and a 7×7 rule table per output.
//!
//! [`T1Engine`] uses max-min composition with centre-of-gravity
//! defuzzification. [`It2Engine`] replaces each term by an interval type-2
//! set (upper/lower membership) and reduces with the Karnik–Mendel procedure.

mod it2;
mod km;
mod mf;
mod partition;
mod rules;
mod surface;
mod t1;

pub use it2::{centroid_of_fou, FouParams, It2Engine, TypeReduction};
pub use km::{km_interval, km_left, km_right};
pub use mf::{FouMf, TriMf};
pub use partition::{FouPartition, FuzzyPartition};
pub use rules::{RuleBase, RULES_CSV_HEADER};
pub use surface::{control_surface, control_surface_csv, SURFACE_CSV_HEADER};
pub use t1::{cog, T1Engine};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Points used to discretise an output universe for defuzzification.
pub const OUTPUT_RESOLUTION: usize = 1001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("no rule fired; the partition does not cover its universe")]
    EmptyAggregate,
    #[error("Karnik-Mendel iteration did not converge in {0} iterations")]
    KmNonconvergence(usize),
    #[error("invalid membership function: {0}")]
    InvalidMf(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("rule table parse error on line {line}: {msg}")]
    RuleParse { line: usize, msg: String },
}

/// Linguistic terms, ordered from negative big to positive big.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NB,
    NM,
    NS,
    ZO,
    PS,
    PM,
    PB,
}

impl Label {
    pub const ALL: [Label; 7] = [
        Label::NB,
        Label::NM,
        Label::NS,
        Label::ZO,
        Label::PS,
        Label::PM,
        Label::PB,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::NB => "NB",
            Label::NM => "NM",
            Label::NS => "NS",
            Label::ZO => "ZO",
            Label::PS => "PS",
            Label::PM => "PM",
            Label::PB => "PB",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s.trim())
            .ok_or_else(|| format!("unknown label {s:?}"))
    }
}

/// Crisp gain increments `(Δkp, Δki, Δkd)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GainDelta {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl GainDelta {
    pub fn as_array(&self) -> [f64; 3] {
        [self.kp, self.ki, self.kd]
    }
}

/// Anything that maps normalised `(e, de)` to gain increments.
pub trait GainTuner: Send + Sync {
    fn infer(&self, e: f64, de: f64) -> Result<GainDelta, FuzzyError>;
}

/// Always returns zero increments; turns a fuzzy PID into a fixed-gain PID.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroTuner;

impl GainTuner for ZeroTuner {
    fn infer(&self, _e: f64, _de: f64) -> Result<GainDelta, FuzzyError> {
        Ok(GainDelta::default())
    }
}

/// Uniform grid of `n` points over `[lo, hi]`.
pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

/// Trapezoidal-rule weights for a uniform grid (the common step cancels in
/// centroid ratios and is omitted).
pub(crate) fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n - 1 {
        0.5
    } else {
        1.0
    }
}
