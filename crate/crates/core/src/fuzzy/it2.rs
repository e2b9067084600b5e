use serde::{Deserialize, Serialize};

use super::km::{km_interval, km_left, km_right};
use super::mf::FouMf;
use super::partition::{FouPartition, FuzzyPartition};
use super::rules::RuleBase;
use super::{linspace, trapezoid_weight, FuzzyError, GainDelta, GainTuner, Label, OUTPUT_RESOLUTION};

/// How the type-2 output is reduced to an interval before averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeReduction {
    /// KM centroid of the aggregated output FOU on the output grid. Collapses
    /// exactly to type-1 COG when every lower set equals its upper set.
    #[default]
    Centroid,
    /// Centre-of-sets: KM over per-rule consequent centroid intervals
    /// weighted by the rule firing intervals.
    CenterOfSets,
}

/// Lower-membership construction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FouParams {
    pub height_scale: f64,
    pub lag: f64,
}

impl Default for FouParams {
    fn default() -> Self {
        FouParams {
            height_scale: 1.0,
            lag: 0.3,
        }
    }
}

/// KM centroid interval `[c_l, c_r]` of one FOU over `resolution` points of
/// `[lo, hi]`.
pub fn centroid_of_fou(set: &FouMf, lo: f64, hi: f64, resolution: usize) -> Result<(f64, f64), FuzzyError> {
    let xs = linspace(lo, hi, resolution);
    let n = xs.len();
    let (mut lower, mut upper) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (i, x) in xs.iter().enumerate() {
        let (l, u) = set.eval(*x);
        let w = trapezoid_weight(i, n);
        lower.push(w * l);
        upper.push(w * u);
    }
    km_interval(&xs, &lower, &upper)
}

/// Interval type-2 Mamdani engine.
#[derive(Debug, Clone)]
pub struct It2Engine {
    rules: RuleBase,
    e_part: FouPartition,
    de_part: FouPartition,
    out_part: FouPartition,
    reduction: TypeReduction,
    grid: Vec<f64>,
    out_lower: [Vec<f64>; 7],
    out_upper: [Vec<f64>; 7],
    consequent_centroids: [(f64, f64); 7],
}

impl It2Engine {
    pub fn new(
        rules: RuleBase,
        e_part: FouPartition,
        de_part: FouPartition,
        out_part: FouPartition,
        reduction: TypeReduction,
    ) -> Result<Self, FuzzyError> {
        let (lo, hi) = out_part.universe();
        let grid = linspace(lo, hi, OUTPUT_RESOLUTION);
        let out_lower = std::array::from_fn(|l| {
            let s = out_part.set(Label::ALL[l]);
            grid.iter().map(|x| s.lmf().eval(*x)).collect()
        });
        let out_upper = std::array::from_fn(|l| {
            let s = out_part.set(Label::ALL[l]);
            grid.iter().map(|x| s.umf().eval(*x)).collect()
        });
        let mut consequent_centroids = [(0.0, 0.0); 7];
        for (l, c) in consequent_centroids.iter_mut().enumerate() {
            *c = centroid_of_fou(out_part.set(Label::ALL[l]), lo, hi, OUTPUT_RESOLUTION)?;
        }
        Ok(It2Engine {
            rules,
            e_part,
            de_part,
            out_part,
            reduction,
            grid,
            out_lower,
            out_upper,
            consequent_centroids,
        })
    }

    /// Standard partitions with upper sets equal to the type-1 terms and lower
    /// sets built from `fou`.
    pub fn standard(fou: FouParams, reduction: TypeReduction) -> Result<Self, FuzzyError> {
        let input = FuzzyPartition::uniform(-1.0, 1.0);
        let output = FuzzyPartition::uniform(-0.1, 0.1);
        Self::new(
            RuleBase::standard(),
            FouPartition::from_type1(&input, fou.height_scale, fou.lag)?,
            FouPartition::from_type1(&input, fou.height_scale, fou.lag)?,
            FouPartition::from_type1(&output, fou.height_scale, fou.lag)?,
            reduction,
        )
    }

    /// Every lower set equal to its upper set.
    pub fn degenerate(reduction: TypeReduction) -> Self {
        let input = FuzzyPartition::uniform(-1.0, 1.0);
        let output = FuzzyPartition::uniform(-0.1, 0.1);
        Self::new(
            RuleBase::standard(),
            FouPartition::degenerate(&input),
            FouPartition::degenerate(&input),
            FouPartition::degenerate(&output),
            reduction,
        )
        .expect("degenerate engine")
    }

    pub fn reduction(&self) -> TypeReduction {
        self.reduction
    }

    pub fn output_partition(&self) -> &FouPartition {
        &self.out_part
    }

    pub fn consequent_centroid(&self, label: Label) -> (f64, f64) {
        self.consequent_centroids[label.index()]
    }

    /// Per-rule `(lower, upper)` firing strengths indexed `[e][de]`.
    pub fn firing_intervals(&self, e: f64, de: f64) -> [[(f64, f64); 7]; 7] {
        let (le, ue) = self.e_part.fuzzify(e);
        let (lde, ude) = self.de_part.fuzzify(de);
        std::array::from_fn(|i| std::array::from_fn(|j| (le[i].min(lde[j]), ue[i].min(ude[j]))))
    }

    /// Type-reduced interval `[y_l, y_r]` for output `out`.
    pub fn type_reduced(&self, out: usize, e: f64, de: f64) -> Result<(f64, f64), FuzzyError> {
        let firing = self.firing_intervals(e, de);
        let table = self.rules.table(out);
        match self.reduction {
            TypeReduction::Centroid => {
                let mut clip_lo = [0.0f64; 7];
                let mut clip_hi = [0.0f64; 7];
                for i in 0..7 {
                    for j in 0..7 {
                        let l = table[i][j].index();
                        clip_lo[l] = clip_lo[l].max(firing[i][j].0);
                        clip_hi[l] = clip_hi[l].max(firing[i][j].1);
                    }
                }
                let n = self.grid.len();
                let mut lower = vec![0.0f64; n];
                let mut upper = vec![0.0f64; n];
                for l in 0..7 {
                    if clip_hi[l] == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        lower[j] = lower[j].max(clip_lo[l].min(self.out_lower[l][j]));
                        upper[j] = upper[j].max(clip_hi[l].min(self.out_upper[l][j]));
                    }
                }
                for j in 0..n {
                    let w = trapezoid_weight(j, n);
                    lower[j] *= w;
                    upper[j] *= w;
                }
                km_interval(&self.grid, &lower, &upper)
            }
            TypeReduction::CenterOfSets => {
                let mut left_pts = Vec::with_capacity(49);
                let mut right_pts = Vec::with_capacity(49);
                let mut f_lo = Vec::with_capacity(49);
                let mut f_hi = Vec::with_capacity(49);
                for i in 0..7 {
                    for j in 0..7 {
                        let (lo, hi) = firing[i][j];
                        if hi == 0.0 {
                            continue;
                        }
                        let (cl, cr) = self.consequent_centroids[table[i][j].index()];
                        left_pts.push(cl);
                        right_pts.push(cr);
                        f_lo.push(lo);
                        f_hi.push(hi);
                    }
                }
                Ok((km_left(&left_pts, &f_lo, &f_hi)?, km_right(&right_pts, &f_lo, &f_hi)?))
            }
        }
    }

    pub fn infer(&self, e: f64, de: f64) -> Result<GainDelta, FuzzyError> {
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let (yl, yr) = self.type_reduced(k, e, de)?;
            *o = 0.5 * (yl + yr);
        }
        Ok(GainDelta {
            kp: out[0],
            ki: out[1],
            kd: out[2],
        })
    }
}

impl GainTuner for It2Engine {
    fn infer(&self, e: f64, de: f64) -> Result<GainDelta, FuzzyError> {
        It2Engine::infer(self, e, de)
    }
}
