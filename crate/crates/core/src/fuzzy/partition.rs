use super::mf::{FouMf, TriMf};
use super::{FuzzyError, Label};

/// Seven overlapping triangular terms NB..PB over a universe `[lo, hi]`.
/// Inputs are clamped to the universe before evaluation, so the outer terms
/// behave as shoulders.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyPartition {
    lo: f64,
    hi: f64,
    mfs: [TriMf; 7],
}

impl FuzzyPartition {
    pub fn new(lo: f64, hi: f64, mfs: [TriMf; 7]) -> Result<Self, FuzzyError> {
        if !(lo < hi) {
            return Err(FuzzyError::InvalidPartition(format!("empty universe [{lo}, {hi}]")));
        }
        if mfs.windows(2).any(|w| w[0].apex() >= w[1].apex()) {
            return Err(FuzzyError::InvalidPartition("apexes must be strictly increasing".into()));
        }
        // adjacent supports must overlap and the ends must be covered
        let covered = mfs.first().unwrap().left() < lo + f64::EPSILON
            && mfs.first().unwrap().apex() <= lo
            && mfs.last().unwrap().apex() >= hi
            && mfs.windows(2).all(|w| w[0].right() > w[1].left());
        if !covered {
            return Err(FuzzyError::InvalidPartition(
                "terms must overlap and cover the universe".into(),
            ));
        }
        Ok(FuzzyPartition { lo, hi, mfs })
    }

    /// Apexes evenly spaced from `lo` to `hi`, each foot on the neighbouring
    /// apex (50 % overlap).
    pub fn uniform(lo: f64, hi: f64) -> Self {
        // built about the midpoint so symmetric universes get exactly
        // antisymmetric apexes (and ZO lands exactly on the midpoint)
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let apex = |i: isize| mid + half * (i - 3) as f64 / 3.0;
        let mfs = std::array::from_fn(|i| {
            let i = i as isize;
            let a = match i {
                0 => lo,
                6 => hi,
                _ => apex(i),
            };
            TriMf::new(apex(i - 1), a, apex(i + 1)).expect("uniform triangle")
        });
        FuzzyPartition::new(lo, hi, mfs).expect("uniform partition is valid")
    }

    pub fn universe(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn mf(&self, label: Label) -> &TriMf {
        &self.mfs[label.index()]
    }

    pub fn mfs(&self) -> &[TriMf; 7] {
        &self.mfs
    }

    /// Membership degree in each term after clamping `x` into the universe.
    pub fn fuzzify(&self, x: f64) -> [f64; 7] {
        let x = x.clamp(self.lo, self.hi);
        std::array::from_fn(|i| self.mfs[i].eval(x))
    }
}

/// Interval type-2 counterpart of [`FuzzyPartition`].
#[derive(Debug, Clone, PartialEq)]
pub struct FouPartition {
    lo: f64,
    hi: f64,
    sets: [FouMf; 7],
}

impl FouPartition {
    /// Upper sets copy `base`; lower sets are built with `height_scale` and `lag`.
    pub fn from_type1(base: &FuzzyPartition, height_scale: f64, lag: f64) -> Result<Self, FuzzyError> {
        let mut sets = [FouMf::degenerate(base.mfs[0]); 7];
        for (s, mf) in sets.iter_mut().zip(base.mfs.iter()) {
            *s = FouMf::from_umf(*mf, height_scale, lag)?;
        }
        Ok(FouPartition {
            lo: base.lo,
            hi: base.hi,
            sets,
        })
    }

    pub fn degenerate(base: &FuzzyPartition) -> Self {
        FouPartition {
            lo: base.lo,
            hi: base.hi,
            sets: base.mfs.map(FouMf::degenerate),
        }
    }

    pub fn universe(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn set(&self, label: Label) -> &FouMf {
        &self.sets[label.index()]
    }

    /// `(lower, upper)` degrees per term after clamping.
    pub fn fuzzify(&self, x: f64) -> ([f64; 7], [f64; 7]) {
        let x = x.clamp(self.lo, self.hi);
        let mut lower = [0.0; 7];
        let mut upper = [0.0; 7];
        for (i, s) in self.sets.iter().enumerate() {
            (lower[i], upper[i]) = s.eval(x);
        }
        (lower, upper)
    }
}
