//! Primal active-set solver for strictly convex box-constrained QPs.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

/// Minimises `½ dᵀHd + gᵀd` subject to `lo ≤ d ≤ hi`.
///
/// `H` must be symmetric positive definite and `d = 0` must be feasible.
pub(crate) fn solve_box_qp(h: &DMatrix<f64>, g: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    let n = g.len();
    debug_assert!((0..n).all(|i| lo[i] <= 0.0 && hi[i] >= 0.0));
    let mut d = DVector::<f64>::zeros(n);
    let mut state = vec![Bound::Free; n];
    // Bounds that sit at zero and are pushed against by the gradient start active.
    for i in 0..n {
        if lo[i] == 0.0 && g[i] > 0.0 {
            state[i] = Bound::Lower;
        } else if hi[i] == 0.0 && g[i] < 0.0 {
            state[i] = Bound::Upper;
        }
    }

    for _ in 0..(10 * n + 10) {
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == Bound::Free).collect();
        let target = if free.is_empty() {
            d.clone()
        } else {
            let m = free.len();
            let mut hff = DMatrix::<f64>::zeros(m, m);
            let mut rhs = DVector::<f64>::zeros(m);
            for (a, &i) in free.iter().enumerate() {
                let mut s = -g[i];
                for j in 0..n {
                    if state[j] != Bound::Free {
                        s -= h[(i, j)] * d[j];
                    }
                }
                rhs[a] = s;
                for (b, &j) in free.iter().enumerate() {
                    hff[(a, b)] = h[(i, j)];
                }
            }
            let Some(chol) = hff.cholesky() else {
                return d;
            };
            let sol = chol.solve(&rhs);
            let mut t = d.clone();
            for (a, &i) in free.iter().enumerate() {
                t[i] = sol[a];
            }
            t
        };

        // Largest feasible fraction of the step toward the subspace minimiser.
        let mut alpha = 1.0;
        let mut blocking = None;
        for &i in &free {
            let p = target[i] - d[i];
            if p < 0.0 && target[i] < lo[i] {
                let a = (lo[i] - d[i]) / p;
                if a < alpha {
                    alpha = a;
                    blocking = Some((i, Bound::Lower));
                }
            } else if p > 0.0 && target[i] > hi[i] {
                let a = (hi[i] - d[i]) / p;
                if a < alpha {
                    alpha = a;
                    blocking = Some((i, Bound::Upper));
                }
            }
        }
        if let Some((i, side)) = blocking {
            for &j in &free {
                d[j] += alpha.max(0.0) * (target[j] - d[j]);
            }
            d[i] = if side == Bound::Lower { lo[i] } else { hi[i] };
            state[i] = side;
            continue;
        }
        d = target;

        let grad = h * &d + g;
        let mut worst = None;
        let mut worst_val = 0.0;
        for i in 0..n {
            let violation = match state[i] {
                Bound::Free => continue,
                Bound::Lower => -grad[i],
                Bound::Upper => grad[i],
            };
            if violation > worst_val {
                worst_val = violation;
                worst = Some(i);
            }
        }
        match worst {
            Some(i) => state[i] = Bound::Free,
            None => break,
        }
    }
    for i in 0..n {
        d[i] = d[i].clamp(lo[i], hi[i]);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn objective(h: &DMatrix<f64>, g: &DVector<f64>, d: &DVector<f64>) -> f64 {
        0.5 * d.dot(&(h * d)) + g.dot(d)
    }

    #[test]
    fn unconstrained_minimiser_inside_box() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let g = DVector::from_vec(vec![-1.0, 0.3]);
        let lo = DVector::from_element(2, -10.0);
        let hi = DVector::from_element(2, 10.0);
        let d = solve_box_qp(&h, &g, &lo, &hi);
        let exact = h.clone().cholesky().unwrap().solve(&(-&g));
        assert!((d - exact).norm() < 1e-12);
    }

    #[test]
    fn matches_brute_force_on_small_boxes() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]);
        let g = DVector::from_vec(vec![-3.0, 1.0]);
        let lo = DVector::from_vec(vec![-0.5, -0.2]);
        let hi = DVector::from_vec(vec![0.7, 0.4]);
        let d = solve_box_qp(&h, &g, &lo, &hi);
        let mut best = f64::INFINITY;
        let steps = 400;
        for a in 0..=steps {
            for b in 0..=steps {
                let x = DVector::from_vec(vec![
                    lo[0] + (hi[0] - lo[0]) * a as f64 / steps as f64,
                    lo[1] + (hi[1] - lo[1]) * b as f64 / steps as f64,
                ]);
                best = best.min(objective(&h, &g, &x));
            }
        }
        let got = objective(&h, &g, &d);
        assert!(got <= best + 1e-12);
        assert!(best - got < 1e-4);
        for i in 0..2 {
            assert!(lo[i] <= d[i] && d[i] <= hi[i]);
        }
    }
}
