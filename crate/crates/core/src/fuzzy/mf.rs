use super::FuzzyError;

/// Triangle with feet `left`, `right` and peak `height` at `apex`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriMf {
    left: f64,
    apex: f64,
    right: f64,
    height: f64,
}

impl TriMf {
    pub fn new(left: f64, apex: f64, right: f64) -> Result<Self, FuzzyError> {
        Self::with_height(left, apex, right, 1.0)
    }

    pub fn with_height(left: f64, apex: f64, right: f64, height: f64) -> Result<Self, FuzzyError> {
        if !(left <= apex && apex <= right) || !left.is_finite() || !right.is_finite() {
            return Err(FuzzyError::InvalidMf(format!(
                "feet must bracket the apex: ({left}, {apex}, {right})"
            )));
        }
        if !(height > 0.0 && height <= 1.0) {
            return Err(FuzzyError::InvalidMf(format!("height {height} outside (0, 1]")));
        }
        Ok(TriMf {
            left,
            apex,
            right,
            height,
        })
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn apex(&self) -> f64 {
        self.apex
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.left || x > self.right {
            0.0
        } else if x == self.apex {
            self.height
        } else if x < self.apex {
            self.height * (x - self.left) / (self.apex - self.left)
        } else {
            self.height * (self.right - x) / (self.right - self.apex)
        }
    }
}

/// Interval type-2 triangular set: an upper triangle and a lower triangle
/// nested inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FouMf {
    umf: TriMf,
    lmf: TriMf,
}

impl FouMf {
    /// Lower set shares the apex, peaks at `height_scale`, and has each foot
    /// pulled toward the apex by `lag` times that side's half-support.
    pub fn from_umf(umf: TriMf, height_scale: f64, lag: f64) -> Result<Self, FuzzyError> {
        if !(0.0..1.0).contains(&lag) {
            return Err(FuzzyError::InvalidMf(format!("lag {lag} outside [0, 1)")));
        }
        let lmf = TriMf::with_height(
            umf.left + lag * (umf.apex - umf.left),
            umf.apex,
            umf.right - lag * (umf.right - umf.apex),
            height_scale * umf.height,
        )?;
        Ok(FouMf { umf, lmf })
    }

    /// Type-1 set viewed as a degenerate FOU.
    pub fn degenerate(umf: TriMf) -> Self {
        FouMf { umf, lmf: umf }
    }

    pub fn umf(&self) -> &TriMf {
        &self.umf
    }

    pub fn lmf(&self) -> &TriMf {
        &self.lmf
    }

    /// `(lower, upper)` membership.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        (self.lmf.eval(x), self.umf.eval(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn triangle_values() {
        let t = TriMf::new(-1.0, 0.0, 2.0).unwrap();
        assert_eq!(t.eval(0.0), 1.0);
        assert_eq!(t.eval(-0.5), 0.5);
        assert_eq!(t.eval(1.0), 0.5);
        assert_eq!(t.eval(2.5), 0.0);
        assert_eq!(t.eval(-1.0), 0.0);
        let shoulder = TriMf::new(0.0, 0.0, 1.0).unwrap();
        assert_eq!(shoulder.eval(0.0), 1.0);
        assert!(TriMf::new(1.0, 0.0, 2.0).is_err());
        assert!(TriMf::with_height(0.0, 1.0, 2.0, 1.5).is_err());
    }

    #[test]
    fn lmf_construction() {
        let u = TriMf::new(-1.0, 0.0, 1.0).unwrap();
        let f = FouMf::from_umf(u, 1.0, 0.3).unwrap();
        assert!((f.lmf().left() + 0.7).abs() < 1e-15);
        assert!((f.lmf().right() - 0.7).abs() < 1e-15);
        assert_eq!(f.lmf().height(), 1.0);
        assert!(FouMf::from_umf(u, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn lmf_below_umf(x in -2.0f64..2.0, lag in 0.0f64..0.9, h in 0.1f64..1.0) {
            let u = TriMf::new(-1.0, 0.2, 1.0).unwrap();
            let f = FouMf::from_umf(u, h, lag).unwrap();
            let (lo, hi) = f.eval(x);
            prop_assert!(lo <= hi + 1e-15);
        }
    }
}
