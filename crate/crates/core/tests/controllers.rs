use std::sync::Arc;

use omnitrack::fpid::{EngineKind, FpidConfig, FpidController, PidState};
use omnitrack::fuzzy::{It2Engine, T1Engine, TypeReduction};
use omnitrack::kinematics::{integrate_pose, BodyVelocity, RobotPose};
use omnitrack::nmpc::{predict, NmpcController, OcpConfig};
use omnitrack::planning::ReferenceTrajectory;
use omnitrack::simlab::{run_episode, standard_scenario, ControllerSpec, Episode, NoiseModel};
use proptest::prelude::*;

fn closed_loop(ctrl: &mut FpidController, traj: &ReferenceTrajectory) -> Vec<BodyVelocity> {
    let mut pose = traj.pose_at(0);
    (0..traj.len())
        .map(|n| {
            let cmd = ctrl.command(&pose, &traj.pose_at(n + 1), traj.ts()).unwrap();
            pose = integrate_pose(&pose, &cmd, traj.ts());
            cmd
        })
        .collect()
}

#[test]
fn degenerate_it2_fpid_reproduces_t1() {
    let traj = standard_scenario(30.0, 0.1).unwrap();
    let cfg = FpidConfig::default();
    let mut t1 = FpidController::with_tuner(cfg.clone(), Arc::new(T1Engine::standard()));
    let mut it2 = FpidController::with_tuner(cfg, Arc::new(It2Engine::degenerate(TypeReduction::Centroid)));
    let a = closed_loop(&mut t1, &traj);
    let b = closed_loop(&mut it2, &traj);
    assert_eq!(a.len(), 301);
    for (n, (x, y)) in a.iter().zip(&b).enumerate() {
        let d = (x.vx - y.vx).abs().max((x.vy - y.vy).abs()).max((x.omega - y.omega).abs());
        assert!(d < 1e-7, "step {n}: {d}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fpid_commands_respect_bounds(
        targets in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -3.1..3.1f64), 1..40),
        it2 in any::<bool>(),
    ) {
        let engine = if it2 { EngineKind::It2 } else { EngineKind::T1 };
        let mut c = FpidController::new(FpidConfig::with_engine(engine)).unwrap();
        let mut pose = RobotPose::default();
        for (x, y, th) in targets {
            let cmd = c.command(&pose, &RobotPose::new(x, y, th), 0.1).unwrap();
            prop_assert!(cmd.speed() <= 1.5 + 1e-12);
            prop_assert!(cmd.omega.abs() <= 3.14);
            let k_max = c.config().k_max;
            for s in [c.distance_state(), c.heading_state()] {
                let g = s.gains();
                prop_assert!([g.kp, g.ki, g.kd].iter().all(|v| (0.0..=k_max).contains(v)));
                prop_assert!(s.integral().abs() <= c.config().i_max);
            }
            pose = integrate_pose(&pose, &cmd, 0.1);
        }
    }

    #[test]
    fn gains_stay_bounded_for_any_error_sequence(errors in prop::collection::vec(-50.0..50.0f64, 1..100)) {
        let cfg = FpidConfig::default().heading_loop();
        let tuner = T1Engine::standard();
        let mut s = PidState::new(&cfg);
        for e in errors {
            s.step(&tuner, &cfg, e, 0.1).unwrap();
            let g = s.gains();
            prop_assert!([g.kp, g.ki, g.kd].iter().all(|v| (0.0..=cfg.k_max).contains(v)));
            prop_assert!(s.integral().abs() <= cfg.i_max);
        }
    }
}

fn consistent_reference() -> ReferenceTrajectory {
    let ts = 0.1;
    let inputs: Vec<[f64; 2]> = (0..60).map(|k| [0.8, 0.5 * (0.1 * k as f64).sin()]).collect();
    let mut poses = vec![RobotPose::new(0.2, -0.1, 0.3)];
    for u in &inputs[..59] {
        poses.push(predict(poses.last().unwrap(), *u, ts));
    }
    ReferenceTrajectory::new(
        ts,
        poses,
        inputs.iter().map(|u| u[0]).collect(),
        inputs.iter().map(|u| u[1]).collect(),
    )
    .unwrap()
}

#[test]
fn nmpc_on_consistent_reference_feeds_forward() {
    let traj = consistent_reference();
    let mut c = NmpcController::new(OcpConfig::default()).unwrap();
    for k in [0, 10, 30] {
        let robot = traj.pose_at(k);
        let step = c.command(&robot, &traj, k).unwrap();
        let [v, w] = traj.input_at(k);
        let psi = robot.theta + 0.1 * w;
        assert!(step.cost <= 1e-8, "cost {}", step.cost);
        assert!((step.velocity.vx - v * psi.cos()).abs() < 1e-5);
        assert!((step.velocity.vy - v * psi.sin()).abs() < 1e-5);
        assert!((step.velocity.omega - w).abs() < 1e-5);
    }
}

#[test]
fn nmpc_past_the_end_at_goal_stops() {
    let traj = consistent_reference();
    let goal = traj.pose_at(traj.len() - 1);
    let mut c = NmpcController::new(OcpConfig::default()).unwrap();
    let step = c.command(&goal, &traj, traj.len() + 5).unwrap();
    assert_eq!(step.velocity, BodyVelocity::default());
}

#[test]
fn warm_start_does_not_cost_iterations() {
    let traj = standard_scenario(20.0, 0.1).unwrap();
    let (mut warm_total, mut cold_total) = (0usize, 0usize);
    for seed in 0..10 {
        let mut ep = Episode::new(traj.clone());
        ep.noise = Some(NoiseModel::default());
        ep.seed = seed;
        let iters = |warm_start: bool| -> usize {
            let spec = ControllerSpec::Nmpc(OcpConfig {
                warm_start,
                ..Default::default()
            });
            run_episode(&ep, &spec)
                .unwrap()
                .records
                .iter()
                .map(|r| r.diagnostics.unwrap().iterations)
                .sum()
        };
        warm_total += iters(true);
        cold_total += iters(false);
    }
    assert!(warm_total <= cold_total, "warm {warm_total} cold {cold_total}");
}
