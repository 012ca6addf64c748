use intentnav::expert::{dwa_control, pure_pursuit, DwaConfig};
use intentnav::planner::PlannedPath;
use intentnav::world::{OccupancyGrid, Pose2D, RobotParams, SimState, Simulator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod support;
use support::oracles::{free_pose, random_scene};

#[test]
fn dwa_matches_exhaustive_oracle() {
    support::oracles::dwa_oracle_agreement(1000, 21);
}

#[test]
fn dwa_never_collides_in_random_static_scenes() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let robot = RobotParams::default();
    let cfg = DwaConfig::default();
    for scene in 0..1000 {
        let g = random_scene(&mut rng, 60);
        let sim = Simulator::new(&g, robot);
        let start = free_pose(&g, &mut rng, robot.radius + cfg.safety_margin + 0.01);
        let target = free_pose(&g, &mut rng, 0.0);
        let mut s = SimState::at_rest(start, vec![]);
        for _ in 0..300 {
            let cmd = match dwa_control(&g, &[], &s.truth, (s.v, s.omega), &target, &robot, &cfg) {
                Ok(c) => c,
                Err(e) => e.braking,
            };
            s = sim.step(&s, cmd, 0.1);
            assert!(!s.collided, "scene {scene} collided at t={:.1}", s.time);
        }
    }
}

#[test]
fn pursuit_cross_track_error_shrinks() {
    let robot = RobotParams {
        accel_v: f64::INFINITY,
        accel_omega: f64::INFINITY,
        ..RobotParams::default()
    };
    let g = OccupancyGrid::empty(300, 60, 0.1);
    let sim = Simulator::new(&g, robot);
    let path = PlannedPath::from_poses((0..140).map(|k| Pose2D::new(1.0 + k as f64 * 0.2, 3.0, 0.0)));
    let mut s = SimState::at_rest(Pose2D::new(1.5, 3.5, 0.0), vec![]);
    let mut errs = Vec::new();
    for _ in 0..150 {
        let cmd = pure_pursuit(&path, &s.truth, 0.8, &robot);
        s = sim.step(&s, cmd.control, 0.1);
        errs.push((s.truth.y - 3.0).abs());
    }
    // The prescribed law linearizes to a second-order loop with damping
    // ratio 1/sqrt(2), so |e| falls monotonically until the first crossing
    // and then overshoots by about exp(-pi) of the initial offset.
    let cross = errs.iter().position(|&e| e < 0.005).unwrap();
    assert!(cross < 60, "no convergence within 6 s");
    for w in errs[10..cross].windows(2) {
        assert!(w[1] < w[0], "{} -> {}", w[0], w[1]);
    }
    let overshoot = errs[cross..].iter().cloned().fold(0.0, f64::max);
    assert!(overshoot < 0.05 * 0.5, "{overshoot}");
    assert!(*errs.last().unwrap() < 1e-3);
}
