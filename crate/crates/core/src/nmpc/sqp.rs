//! Gauss-Newton SQP with a condensed box-constrained QP per iteration.
//!
//! States are eliminated through the dynamics (they are re-rolled out from
//! the inputs after every accepted step), which makes the QP a bound-
//! constrained problem in the inputs alone.

use nalgebra::{DMatrix, DVector};

use super::qp::solve_box_qp;
use super::{defect_norm, rollout, trajectory_cost, NmpcError, OcpConfig, OcpProblem, OcpSolution, SolveStatus};
use crate::angle::wrap_angle;
use crate::kinematics::RobotPose;

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
/// Curvature below which a stationary point is treated as a saddle.
const NEGATIVE_CURVATURE: f64 = -1e-3;
const MAX_ESCAPES: usize = 3;

/// Solves the OCP, warm-starting from the inputs of `warm_start` when given.
pub fn solve(problem: &OcpProblem, cfg: &OcpConfig, warm_start: Option<&OcpSolution>) -> Result<OcpSolution, NmpcError> {
    solve_from(problem, cfg, warm_start.map(|s| s.inputs.as_slice()))
}

pub(crate) fn solve_from(problem: &OcpProblem, cfg: &OcpConfig, initial_inputs: Option<&[[f64; 2]]>) -> Result<OcpSolution, NmpcError> {
    cfg.validate()?;
    let np = problem.horizon();
    if np != cfg.horizon {
        return Err(NmpcError::InvalidProblem(format!(
            "problem horizon {np} does not match config horizon {}",
            cfg.horizon
        )));
    }
    let clamp = |u: [f64; 2]| [u[0].clamp(-cfg.v_max, cfg.v_max), u[1].clamp(-cfg.omega_max, cfg.omega_max)];
    let mut inputs: Vec<[f64; 2]> = match initial_inputs {
        Some(u) if u.len() == np => u.iter().map(|u| clamp(*u)).collect(),
        _ => problem.u_ref().iter().map(|u| clamp(*u)).collect(),
    };
    let mut states = rollout(&problem.initial(), &inputs, cfg.ts);
    let mut current = trajectory_cost(problem, cfg, &inputs, &states);
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIterations;

    let lo_bound = [-cfg.v_max, -cfg.omega_max];
    let hi_bound = [cfg.v_max, cfg.omega_max];
    let mut kkt;
    let mut escapes = 0;
    loop {
        let (r, j) = residual_and_jacobian(problem, cfg, &inputs, &states);
        let jt = j.transpose();
        let g = &jt * &r;
        kkt = projected_gradient_norm(&inputs, &g, cfg);
        if kkt <= cfg.kkt_tol {
            // Gauss-Newton cannot see negative curvature, so a stationary
            // point may be a saddle. Check the exact Hessian before stopping.
            if escapes < MAX_ESCAPES && iterations < cfg.max_iterations {
                if let Some((u, x, c)) = escape_saddle(problem, cfg, &inputs, current) {
                    escapes += 1;
                    iterations += 1;
                    inputs = u;
                    states = x;
                    current = c;
                    continue;
                }
            }
            status = SolveStatus::Converged;
            break;
        }
        if iterations >= cfg.max_iterations {
            break;
        }
        let h = &jt * &j;
        let n = 2 * np;
        let lo = DVector::from_fn(n, |i, _| lo_bound[i % 2] - inputs[i / 2][i % 2]);
        let hi = DVector::from_fn(n, |i, _| hi_bound[i % 2] - inputs[i / 2][i % 2]);
        let d = solve_box_qp(&h, &g, &lo, &hi);
        // Directional derivative of the true cost, which is twice ½‖r‖².
        let slope = 2.0 * g.dot(&d);
        if !(slope < 0.0) {
            status = SolveStatus::Stalled;
            break;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<[f64; 2]> = (0..np)
                .map(|k| clamp([inputs[k][0] + alpha * d[2 * k], inputs[k][1] + alpha * d[2 * k + 1]]))
                .collect();
            let trial_states = rollout(&problem.initial(), &trial, cfg.ts);
            let c = trajectory_cost(problem, cfg, &trial, &trial_states);
            if c <= current + ARMIJO * alpha * slope {
                accepted = Some((trial, trial_states, c));
                break;
            }
            alpha *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((u, x, c)) => {
                inputs = u;
                states = x;
                current = c;
            }
            None => {
                status = SolveStatus::Stalled;
                break;
            }
        }
    }
    let defect = defect_norm(problem, cfg, &inputs, &states);
    Ok(OcpSolution {
        inputs,
        states,
        cost: current,
        kkt_residual: kkt,
        defect_norm: defect,
        iterations,
        status,
    })
}

fn cost_gradient(problem: &OcpProblem, cfg: &OcpConfig, inputs: &[[f64; 2]]) -> DVector<f64> {
    let states = rollout(&problem.initial(), inputs, cfg.ts);
    let (r, j) = residual_and_jacobian(problem, cfg, inputs, &states);
    2.0 * j.transpose() * r
}

type Iterate = (Vec<[f64; 2]>, Vec<RobotPose>, f64);

/// Looks for a direction of negative curvature among inputs off their bounds
/// and moves along it if that lowers the cost.
fn escape_saddle(problem: &OcpProblem, cfg: &OcpConfig, inputs: &[[f64; 2]], current: f64) -> Option<Iterate> {
    let bounds = [cfg.v_max, cfg.omega_max];
    let free: Vec<usize> = (0..2 * inputs.len())
        .filter(|&i| inputs[i / 2][i % 2].abs() < bounds[i % 2])
        .collect();
    if free.is_empty() {
        return None;
    }
    // Central differences of the analytic gradient.
    let h = 1e-5;
    let m = free.len();
    let mut hess = DMatrix::<f64>::zeros(m, m);
    for (a, &i) in free.iter().enumerate() {
        let mut up = inputs.to_vec();
        let mut down = inputs.to_vec();
        up[i / 2][i % 2] += h;
        down[i / 2][i % 2] -= h;
        let col = (cost_gradient(problem, cfg, &up) - cost_gradient(problem, cfg, &down)) / (2.0 * h);
        for (b, &k) in free.iter().enumerate() {
            hess[(b, a)] = col[k];
        }
    }
    let hess = 0.5 * (&hess + hess.transpose());
    let eig = hess.symmetric_eigen();
    let (idx, lambda) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    if lambda >= NEGATIVE_CURVATURE {
        return None;
    }
    let dir = eig.eigenvectors.column(idx).into_owned();
    let g = cost_gradient(problem, cfg, inputs);
    let slope: f64 = free.iter().enumerate().map(|(a, &i)| g[i] * dir[a]).sum();
    let sign = if slope > 0.0 { -1.0 } else { 1.0 };
    let mut alpha = bounds[0].min(bounds[1]);
    for _ in 0..MAX_BACKTRACKS {
        let mut trial = inputs.to_vec();
        for (a, &i) in free.iter().enumerate() {
            let v = trial[i / 2][i % 2] + sign * alpha * dir[a];
            trial[i / 2][i % 2] = v.clamp(-bounds[i % 2], bounds[i % 2]);
        }
        let states = rollout(&problem.initial(), &trial, cfg.ts);
        let c = trajectory_cost(problem, cfg, &trial, &states);
        if c < current + 0.25 * lambda * alpha * alpha {
            return Some((trial, states, c));
        }
        alpha *= 0.5;
    }
    None
}

/// `‖u − clamp(u − ∇J)‖∞` with `∇J = 2 Jᵀr`.
fn projected_gradient_norm(inputs: &[[f64; 2]], g: &DVector<f64>, cfg: &OcpConfig) -> f64 {
    let bounds = [cfg.v_max, cfg.omega_max];
    let mut worst = 0.0f64;
    for (k, u) in inputs.iter().enumerate() {
        for c in 0..2 {
            let step = (u[c] - 2.0 * g[2 * k + c]).clamp(-bounds[c], bounds[c]);
            worst = worst.max((u[c] - step).abs());
        }
    }
    worst
}

/// Weighted residual `r` (cost = ‖r‖²) and its Jacobian with respect to the
/// inputs. The fixed initial-state term is left out since it has no
/// sensitivity.
fn residual_and_jacobian(problem: &OcpProblem, cfg: &OcpConfig, inputs: &[[f64; 2]], states: &[RobotPose]) -> (DVector<f64>, DMatrix<f64>) {
    let np = inputs.len();
    let rows = 3 * np + 2 * np;
    let cols = 2 * np;
    let sq = [cfg.q[0].sqrt(), cfg.q[1].sqrt(), cfg.q[2].sqrt()];
    let sr = [cfg.r[0].sqrt(), cfg.r[1].sqrt()];
    let mut r = DVector::<f64>::zeros(rows);
    let mut jac = DMatrix::<f64>::zeros(rows, cols);

    // sens holds dx_k/du for the current k, a 3 × 2Np block.
    let mut sens = DMatrix::<f64>::zeros(3, cols);
    for k in 0..np {
        let x = &states[k];
        let u = inputs[k];
        let (s, c) = x.theta.sin_cos();
        let ts = cfg.ts;
        // x_{k+1} = A x_k + B u_k in linearised form.
        let mut next = sens.clone();
        for col in 0..cols {
            next[(0, col)] += -ts * u[0] * s * sens[(2, col)];
            next[(1, col)] += ts * u[0] * c * sens[(2, col)];
        }
        next[(0, 2 * k)] += ts * c;
        next[(1, 2 * k)] += ts * s;
        next[(2, 2 * k + 1)] += ts;
        sens = next;

        let xk = &states[k + 1];
        let xr = &problem.x_ref()[k + 1];
        let e = [xk.x - xr.x, xk.y - xr.y, wrap_angle(xk.theta - xr.theta)];
        for i in 0..3 {
            r[3 * k + i] = sq[i] * e[i];
            for col in 0..cols {
                jac[(3 * k + i, col)] = sq[i] * sens[(i, col)];
            }
        }
    }
    let base = 3 * np;
    for (k, (u, ur)) in inputs.iter().zip(problem.u_ref()).enumerate() {
        for i in 0..2 {
            r[base + 2 * k + i] = sr[i] * (u[i] - ur[i]);
            jac[(base + 2 * k + i, 2 * k + i)] = sr[i];
        }
    }
    (r, jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nmpc::predict;

    fn consistent_problem(np: usize, u: &[[f64; 2]]) -> OcpProblem {
        let x0 = RobotPose::new(0.3, -0.2, 0.4);
        let x_ref = rollout(&x0, u, 0.1);
        OcpProblem::new(x0, x_ref, u.to_vec()).unwrap_or_else(|_| panic!("np {np}"))
    }

    #[test]
    fn fixed_point_on_consistent_reference() {
        let u: Vec<[f64; 2]> = (0..15).map(|k| [0.8 + 0.01 * k as f64, 0.3 - 0.02 * k as f64]).collect();
        let p = consistent_problem(15, &u);
        let sol = solve(&p, &OcpConfig::default(), None).unwrap();
        assert!(sol.cost <= 1e-8);
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!((sol.inputs[0][0] - u[0][0]).abs() < 1e-6);
    }

    #[test]
    fn fast_reference_pins_speed_at_bound() {
        let np = 10;
        let x_ref = (0..=np).map(|k| RobotPose::new(0.3 * k as f64, 0.0, 0.0)).collect();
        let p = OcpProblem::new(RobotPose::default(), x_ref, vec![[3.0, 0.0]; np]).unwrap();
        let cfg = OcpConfig::with_horizon(np);
        let sol = solve(&p, &cfg, None).unwrap();
        assert_eq!(sol.inputs[0][0], 1.5);
        assert!(sol.inputs.iter().all(|u| u[0].abs() <= 1.5 && u[1].abs() <= 3.14));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let cfg = OcpConfig::with_horizon(4);
        let u = vec![[0.5, 0.2], [0.7, -0.4], [1.0, 0.1], [0.2, 0.9]];
        let x0 = RobotPose::new(0.0, 0.1, -0.3);
        let x_ref = (0..5).map(|k| RobotPose::new(0.05 * k as f64, 0.02, 0.1)).collect();
        let p = OcpProblem::new(x0, x_ref, vec![[0.4, 0.0]; 4]).unwrap();
        let states = rollout(&x0, &u, cfg.ts);
        let (r0, jac) = residual_and_jacobian(&p, &cfg, &u, &states);
        let h = 1e-7;
        for col in 0..8 {
            let mut up = u.clone();
            up[col / 2][col % 2] += h;
            let (r1, _) = residual_and_jacobian(&p, &cfg, &up, &rollout(&x0, &up, cfg.ts));
            let fd = (r1 - &r0) / h;
            for row in 0..r0.len() {
                assert!((fd[row] - jac[(row, col)]).abs() < 1e-5, "row {row} col {col}");
            }
        }
    }

    #[test]
    fn defects_vanish_and_cost_decreases_over_iterations() {
        let np = 8;
        let x_ref = (0..=np).map(|k| RobotPose::new(0.1 * k as f64, 0.5, 1.0)).collect();
        let p = OcpProblem::new(RobotPose::default(), x_ref, vec![[1.0, 0.0]; np]).unwrap();
        let mut last = f64::INFINITY;
        for iters in 1..6 {
            let cfg = OcpConfig {
                horizon: np,
                max_iterations: iters,
                kkt_tol: 1e-12,
                ..Default::default()
            };
            let sol = solve(&p, &cfg, None).unwrap();
            assert!(sol.defect_norm <= 1e-12);
            assert!(sol.cost <= last);
            last = sol.cost;
            for k in 0..np {
                let next = predict(&sol.states[k], sol.inputs[k], cfg.ts);
                assert_eq!(next, sol.states[k + 1]);
            }
        }
    }

    #[test]
    fn leaves_lateral_saddle() {
        // Sideways target: zero input is stationary but not a minimum.
        let np = 15;
        let goal = RobotPose::new(0.0, 1.0, 0.0);
        let p = OcpProblem::new(RobotPose::default(), vec![goal; np + 1], vec![[0.0, 0.0]; np]).unwrap();
        let cfg = OcpConfig::with_horizon(np);
        let sol = solve(&p, &cfg, None).unwrap();
        let idle = trajectory_cost(&p, &cfg, &vec![[0.0, 0.0]; np], &vec![RobotPose::default(); np + 1]);
        assert!(sol.cost < idle - 1e-3, "{} vs {idle}", sol.cost);
        assert!(sol.inputs.iter().any(|u| u[0] != 0.0));
    }

    #[test]
    fn heading_shift_by_full_turn_is_invisible() {
        let np = 6;
        let x_ref: Vec<RobotPose> = (0..=np).map(|k| RobotPose::new(0.1 * k as f64, 0.05 * k as f64, 0.4)).collect();
        let shifted = x_ref
            .iter()
            .map(|p| RobotPose { theta: p.theta + 2.0 * std::f64::consts::PI, ..*p })
            .collect();
        let cfg = OcpConfig::with_horizon(np);
        let a = solve(&OcpProblem::new(RobotPose::default(), x_ref, vec![[1.0, 0.0]; np]).unwrap(), &cfg, None).unwrap();
        let b = solve(&OcpProblem::new(RobotPose::default(), shifted, vec![[1.0, 0.0]; np]).unwrap(), &cfg, None).unwrap();
        for (ua, ub) in a.inputs.iter().zip(&b.inputs) {
            assert!((ua[0] - ub[0]).abs() < 1e-9 && (ua[1] - ub[1]).abs() < 1e-9);
        }
    }
}
