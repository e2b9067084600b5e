use super::partition::FuzzyPartition;
use super::rules::RuleBase;
use super::{linspace, trapezoid_weight, FuzzyError, GainDelta, GainTuner, OUTPUT_RESOLUTION};

/// Trapezoidal centre of gravity `∫x·μ / ∫μ` on a uniform grid.
pub fn cog(xs: &[f64], mu: &[f64]) -> Result<f64, FuzzyError> {
    let n = xs.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let w = trapezoid_weight(i, n) * mu[i];
        num += w * xs[i];
        den += w;
    }
    if den <= 0.0 {
        return Err(FuzzyError::EmptyAggregate);
    }
    Ok(num / den)
}

/// Type-1 Mamdani engine: min firing, min clipping, max aggregation, COG.
#[derive(Debug, Clone)]
pub struct T1Engine {
    rules: RuleBase,
    e_part: FuzzyPartition,
    de_part: FuzzyPartition,
    out_part: FuzzyPartition,
    grid: Vec<f64>,
    // out_mu[label][j] = membership of grid point j in output term `label`
    out_mu: [Vec<f64>; 7],
}

impl T1Engine {
    pub fn new(
        rules: RuleBase,
        e_part: FuzzyPartition,
        de_part: FuzzyPartition,
        out_part: FuzzyPartition,
    ) -> Self {
        Self::with_resolution(rules, e_part, de_part, out_part, OUTPUT_RESOLUTION)
    }

    pub fn with_resolution(
        rules: RuleBase,
        e_part: FuzzyPartition,
        de_part: FuzzyPartition,
        out_part: FuzzyPartition,
        resolution: usize,
    ) -> Self {
        let (lo, hi) = out_part.universe();
        let grid = linspace(lo, hi, resolution);
        let out_mu = std::array::from_fn(|l| grid.iter().map(|x| out_part.mfs()[l].eval(*x)).collect());
        T1Engine {
            rules,
            e_part,
            de_part,
            out_part,
            grid,
            out_mu,
        }
    }

    /// Uniform partitions on `[-1, 1]` (inputs) and `[-0.1, 0.1]` (outputs)
    /// with the standard rule table.
    pub fn standard() -> Self {
        T1Engine::new(
            RuleBase::standard(),
            FuzzyPartition::uniform(-1.0, 1.0),
            FuzzyPartition::uniform(-1.0, 1.0),
            FuzzyPartition::uniform(-0.1, 0.1),
        )
    }

    pub fn rules(&self) -> &RuleBase {
        &self.rules
    }

    pub fn output_partition(&self) -> &FuzzyPartition {
        &self.out_part
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Aggregated output membership over the grid for output `out`.
    pub fn aggregate(&self, out: usize, e: f64, de: f64) -> Vec<f64> {
        let fe = self.e_part.fuzzify(e);
        let fde = self.de_part.fuzzify(de);
        // max-min over rules sharing a consequent reduces to clipping each
        // output term at the strongest firing among those rules
        let mut clip = [0.0f64; 7];
        for (i, me) in fe.iter().enumerate() {
            if *me == 0.0 {
                continue;
            }
            for (j, mde) in fde.iter().enumerate() {
                let s = me.min(*mde);
                let l = self.rules.table(out)[i][j].index();
                clip[l] = clip[l].max(s);
            }
        }
        let mut agg = vec![0.0f64; self.grid.len()];
        for (l, c) in clip.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            for (a, m) in agg.iter_mut().zip(&self.out_mu[l]) {
                *a = a.max(c.min(*m));
            }
        }
        agg
    }

    pub fn infer(&self, e: f64, de: f64) -> Result<GainDelta, FuzzyError> {
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            *o = cog(&self.grid, &self.aggregate(k, e, de))?;
        }
        Ok(GainDelta {
            kp: out[0],
            ki: out[1],
            kd: out[2],
        })
    }
}

impl GainTuner for T1Engine {
    fn infer(&self, e: f64, de: f64) -> Result<GainDelta, FuzzyError> {
        T1Engine::infer(self, e, de)
    }
}
