//! Karnik–Mendel switch-point iterations for the extreme values of an
//! interval-weighted average `Σ wᵢyᵢ / Σ wᵢ`, `wᵢ ∈ [lowerᵢ, upperᵢ]`.

use super::FuzzyError;

const MAX_ITERATIONS: usize = 100;

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

/// `(y_l, y_r)` for the given points and weight intervals.
pub fn km_interval(points: &[f64], lower: &[f64], upper: &[f64]) -> Result<(f64, f64), FuzzyError> {
    Ok((km_left(points, lower, upper)?, km_right(points, lower, upper)?))
}

/// Minimum of the weighted average over all admissible weights.
pub fn km_left(points: &[f64], lower: &[f64], upper: &[f64]) -> Result<f64, FuzzyError> {
    km(points, lower, upper, Side::Left)
}

/// Maximum of the weighted average over all admissible weights.
pub fn km_right(points: &[f64], lower: &[f64], upper: &[f64]) -> Result<f64, FuzzyError> {
    km(points, lower, upper, Side::Right)
}

fn km(points: &[f64], lower: &[f64], upper: &[f64], side: Side) -> Result<f64, FuzzyError> {
    assert!(points.len() == lower.len() && points.len() == upper.len());
    let sorted = points.windows(2).all(|w| w[0] <= w[1]);
    let order: Vec<usize> = if sorted {
        (0..points.len()).collect()
    } else {
        let mut o: Vec<usize> = (0..points.len()).collect();
        o.sort_by(|a, b| points[*a].total_cmp(&points[*b]));
        o
    };
    let y: Vec<f64> = order.iter().map(|i| points[*i]).collect();
    let lo: Vec<f64> = order.iter().map(|i| lower[*i]).collect();
    let hi: Vec<f64> = order.iter().map(|i| upper[*i]).collect();

    let weighted = |w: &dyn Fn(usize) -> f64| -> Result<f64, FuzzyError> {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..y.len() {
            let wi = w(i);
            num += wi * y[i];
            den += wi;
        }
        if den > 0.0 {
            Ok(num / den)
        } else {
            Err(FuzzyError::EmptyAggregate)
        }
    };
    // Number of leading points in the low group. Left: points <= c take the
    // upper weight. Right: points < c take the lower weight. A point equal to
    // c does not move the average either way.
    let split = |c: f64| match side {
        Side::Left => y.partition_point(|v| *v <= c),
        Side::Right => y.partition_point(|v| *v < c),
    };

    let mut prev = weighted(&|i| 0.5 * (lo[i] + hi[i]))?;
    let mut m = split(prev);
    for _ in 0..MAX_ITERATIONS {
        let c = match side {
            Side::Left => weighted(&|i| if i < m { hi[i] } else { lo[i] })?,
            Side::Right => weighted(&|i| if i < m { lo[i] } else { hi[i] })?,
        };
        let m_next = split(c);
        // The exact iterates move monotonically; once rounding stops them
        // improving (ties between equal points) the switch point is found.
        let eps = 1e-15 * (1.0 + c.abs());
        let stalled = match side {
            Side::Left => c >= prev - eps,
            Side::Right => c <= prev + eps,
        };
        if m_next == m || stalled {
            return Ok(c);
        }
        prev = c;
        m = m_next;
    }
    Err(FuzzyError::KmNonconvergence(MAX_ITERATIONS))
}
