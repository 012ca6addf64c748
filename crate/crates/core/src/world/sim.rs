use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{wrap_angle, Control, OccupancyGrid, Pose2D, RobotParams, WorldError};

/// A disc that walks a polyline at constant speed, reversing at the ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicObstacle {
    pub center: Pose2D,
    pub radius: f64,
    pub waypoints: Vec<[f64; 2]>,
    pub speed: f64,
    // arc-length parameter along the doubled (out-and-back) polyline
    progress: f64,
}

impl DynamicObstacle {
    pub fn new(radius: f64, speed: f64, waypoints: Vec<[f64; 2]>) -> Result<Self, WorldError> {
        if !(radius > 0.0) || !(speed >= 0.0) || waypoints.is_empty() {
            return Err(WorldError::Scene(format!(
                "obstacle needs radius > 0, speed >= 0 and a waypoint (got r={radius}, s={speed})"
            )));
        }
        let mut o = Self {
            center: Pose2D::new(waypoints[0][0], waypoints[0][1], 0.0),
            radius,
            waypoints,
            speed,
            progress: 0.0,
        };
        o.center = o.pose_at(0.0);
        Ok(o)
    }

    fn length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }

    fn pose_at(&self, progress: f64) -> Pose2D {
        let len = self.length();
        if len <= 0.0 {
            let p = self.waypoints[0];
            return Pose2D::new(p[0], p[1], 0.0);
        }
        let cyc = progress.rem_euclid(2.0 * len);
        let (mut s, backwards) = if cyc <= len {
            (cyc, false)
        } else {
            (2.0 * len - cyc, true)
        };
        let segments = self.waypoints.len() - 1;
        for (k, w) in self.waypoints.windows(2).enumerate() {
            let seg = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            if s <= seg || k + 1 == segments {
                let t = if seg > 0.0 { (s / seg).min(1.0) } else { 0.0 };
                let mut heading = (w[1][1] - w[0][1]).atan2(w[1][0] - w[0][0]);
                if backwards {
                    heading += std::f64::consts::PI;
                }
                return Pose2D::new(
                    w[0][0] + t * (w[1][0] - w[0][0]),
                    w[0][1] + t * (w[1][1] - w[0][1]),
                    heading,
                );
            }
            s -= seg;
        }
        unreachable!("polyline has at least one segment")
    }

    pub fn advance(&mut self, dt: f64) {
        self.progress += self.speed * dt;
        self.center = self.pose_at(self.progress);
    }

    pub fn overlaps_disc(&self, p: [f64; 2], r: f64) -> bool {
        (self.center.x - p[0]).hypot(self.center.y - p[1]) < self.radius + r
    }
}

/// Parses a scene file: one `obstacle <radius> <speed> <x1> <y1> ...` per line.
pub fn parse_scene(text: &str) -> Result<Vec<DynamicObstacle>, WorldError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        if it.next() != Some("obstacle") {
            return Err(WorldError::Scene(format!("line {}: expected `obstacle`", n + 1)));
        }
        let nums: Result<Vec<f64>, _> = it.map(str::parse::<f64>).collect();
        let nums = nums.map_err(|e| WorldError::Scene(format!("line {}: {e}", n + 1)))?;
        if nums.len() < 4 || nums.len() % 2 != 0 {
            return Err(WorldError::Scene(format!(
                "line {}: need radius, speed and x/y pairs",
                n + 1
            )));
        }
        let pts = nums[2..].chunks(2).map(|c| [c[0], c[1]]).collect();
        out.push(DynamicObstacle::new(nums[0], nums[1], pts)?);
    }
    Ok(out)
}

pub fn load_scene(path: &Path) -> Result<Vec<DynamicObstacle>, WorldError> {
    let text = fs::read_to_string(path).map_err(|source| WorldError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scene(&text)
}

pub fn format_scene(obstacles: &[DynamicObstacle]) -> String {
    let mut s = String::new();
    for o in obstacles {
        s.push_str(&format!("obstacle {} {}", o.radius, o.speed));
        for p in &o.waypoints {
            s.push_str(&format!(" {} {}", p[0], p[1]));
        }
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub truth: Pose2D,
    /// Linear velocity (m/s).
    pub v: f64,
    /// Angular velocity (rad/s).
    pub omega: f64,
    pub time: f64,
    pub obstacles: Vec<DynamicObstacle>,
    /// Set when the last step ended in contact: the commanded motion was
    /// truncated at the first touching pose and the velocities zeroed.
    pub collided: bool,
}

impl SimState {
    pub fn at_rest(pose: Pose2D, obstacles: Vec<DynamicObstacle>) -> Self {
        Self {
            truth: pose,
            v: 0.0,
            omega: 0.0,
            time: 0.0,
            obstacles,
            collided: false,
        }
    }
}

/// Single Euler step of the unicycle model (heading updated after the
/// translation uses the old heading).
pub fn integrate(pose: &Pose2D, v: f64, omega: f64, dt: f64) -> Pose2D {
    let (s, c) = pose.theta.sin_cos();
    Pose2D::new(pose.x + v * c * dt, pose.y + v * s * dt, pose.theta + omega * dt)
}

/// Velocity after one acceleration-limited period toward the command.
pub fn limit_accel(current: f64, target: f64, accel: f64, dt: f64) -> f64 {
    let dv = (target - current).clamp(-accel * dt, accel * dt);
    current + dv
}

/// Differential-drive simulator on a fixed map.
#[derive(Clone, Debug)]
pub struct Simulator<'a> {
    pub grid: &'a OccupancyGrid,
    pub robot: RobotParams,
}

impl<'a> Simulator<'a> {
    pub fn new(grid: &'a OccupancyGrid, robot: RobotParams) -> Self {
        Self { grid, robot }
    }

    pub fn pose_collides(&self, pose: &Pose2D, obstacles: &[DynamicObstacle]) -> bool {
        let p = pose.xy();
        self.grid.disc_collides(p, self.robot.radius) || obstacles.iter().any(|o| o.overlaps_disc(p, self.robot.radius))
    }

    pub fn step(&self, state: &SimState, cmd: Control, dt: f64) -> SimState {
        assert!(dt > 0.0, "dt must be positive");
        let (v_cmd, w_cmd) = cmd.to_physical(&self.robot);
        let v = limit_accel(state.v, v_cmd, self.robot.accel_v, dt);
        let omega = limit_accel(state.omega, w_cmd, self.robot.accel_omega, dt);
        let mut obstacles = state.obstacles.clone();
        for o in &mut obstacles {
            o.advance(dt);
        }
        let target = integrate(&state.truth, v, omega, dt);
        let mut next = SimState {
            truth: target,
            v,
            omega,
            time: state.time + dt,
            obstacles,
            collided: false,
        };
        if !self.pose_collides(&target, &next.obstacles) {
            return next;
        }
        // bisect for the last contact-free fraction of the motion
        let mut lo = 0.0;
        let mut hi = 1.0;
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            let p = integrate(&state.truth, v, omega, dt * mid);
            if self.pose_collides(&p, &next.obstacles) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let stop = integrate(&state.truth, v, omega, dt * lo);
        next.truth = if self.pose_collides(&stop, &next.obstacles) {
            state.truth
        } else {
            stop
        };
        next.truth.theta = wrap_angle(next.truth.theta);
        next.v = 0.0;
        next.omega = 0.0;
        next.collided = true;
        next
    }
}
