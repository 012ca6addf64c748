use crate::planner::{project_on_path, PlannedPath};
use crate::world::{Control, Pose2D, RobotParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PursuitCommand {
    pub control: Control,
    /// Commanded path curvature (1/m).
    pub kappa: f64,
}

/// Point `dist` meters ahead of the robot's projection on the path, clamped
/// to the path end.
pub fn carrot(path: &PlannedPath, pose: &Pose2D, dist: f64) -> Pose2D {
    path.pose_at(project_on_path(path, pose) + dist)
}

pub fn pure_pursuit(path: &PlannedPath, pose: &Pose2D, lookahead: f64, robot: &RobotParams) -> PursuitCommand {
    assert!(lookahead > 0.0, "lookahead must be positive");
    let goal = carrot(path, pose, lookahead);
    let local = pose.to_local(goal.xy());
    let alpha = if local[0] == 0.0 && local[1] == 0.0 {
        0.0
    } else {
        local[1].atan2(local[0])
    };
    let kappa = 2.0 * alpha.sin() / lookahead;
    let v = robot.v_max * (1.0 - 0.8 * (kappa.abs() / robot.kappa_max()).min(1.0));
    PursuitCommand {
        control: Control::from_physical(v, kappa * v, robot),
        kappa,
    }
}
