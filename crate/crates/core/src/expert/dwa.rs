use serde::{Deserialize, Serialize};

use crate::world::{integrate, wrap_angle, Control, DynamicObstacle, OccupancyGrid, Pose2D, RobotParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DwaConfig {
    pub v_samples: usize,
    pub w_samples: usize,
    pub horizon: f64,
    pub dt_sim: f64,
    /// Control period the window is computed for (s).
    pub dt_window: f64,
    pub alpha_heading: f64,
    pub beta_clearance: f64,
    pub gamma_velocity: f64,
    /// Extra radius added to the robot disc when rolling out arcs (m).
    pub safety_margin: f64,
    /// Clearance beyond this counts as 1 in the objective (m).
    pub clearance_cap: f64,
}

impl Default for DwaConfig {
    fn default() -> Self {
        Self {
            v_samples: 11,
            w_samples: 21,
            horizon: 1.5,
            dt_sim: 0.1,
            dt_window: 0.1,
            alpha_heading: 0.8,
            beta_clearance: 0.1,
            gamma_velocity: 0.1,
            safety_margin: 0.05,
            clearance_cap: 1.0,
        }
    }
}

impl DwaConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.v_samples < 3 || self.w_samples < 3 {
            return Err("dwa sample counts must be >= 3".into());
        }
        if !(self.horizon > self.dt_sim && self.dt_sim > 0.0 && self.dt_window > 0.0) {
            return Err("dwa needs horizon > dt_sim > 0".into());
        }
        if self.alpha_heading < 0.0 || self.beta_clearance < 0.0 || self.gamma_velocity < 0.0 {
            return Err("dwa weights must be nonnegative".into());
        }
        if !(self.clearance_cap > 0.0) || self.safety_margin < 0.0 {
            return Err("dwa clearance_cap must be positive and safety_margin nonnegative".into());
        }
        Ok(())
    }
}

/// No sampled velocity can stop before a collision. Carries the maximal
/// braking command (same curvature, lowest reachable speed).
#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
#[error("dynamic window has no admissible velocity")]
pub struct EmptyWindow {
    pub braking: Control,
}

fn linspace_sym(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    // mirror-exact around the window center
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let m = (n - 1) as f64;
    (0..n).map(|k| mid + half * ((2 * k) as f64 - m) / m).collect()
}

/// Sampled `(v, omega)` values of the dynamic window reachable within one
/// control period from `(v, omega)`. Speeds are restricted to forward motion.
pub fn window_samples(v: f64, omega: f64, robot: &RobotParams, cfg: &DwaConfig) -> (Vec<f64>, Vec<f64>) {
    let dt = cfg.dt_window;
    let v_lo = (v - robot.accel_v * dt).max(0.0);
    let v_hi = (v + robot.accel_v * dt).min(robot.v_max).max(v_lo);
    let w_lo = (omega - robot.accel_omega * dt).max(-robot.omega_max);
    let w_hi = (omega + robot.accel_omega * dt).min(robot.omega_max).max(w_lo);
    (
        linspace_sym(v_lo, v_hi, cfg.v_samples),
        linspace_sym(w_lo, w_hi, cfg.w_samples),
    )
}

struct Rollout {
    end: Pose2D,
    clearance: f64,
    /// Arc length to the last state before the first collision.
    d_col: Option<f64>,
}

fn rollout(
    grid: &OccupancyGrid,
    obstacles: &[DynamicObstacle],
    pose: &Pose2D,
    v: f64,
    w: f64,
    r: f64,
    cfg: &DwaConfig,
) -> Rollout {
    let steps = (cfg.horizon / cfg.dt_sim).round().max(1.0) as usize;
    let mut p = *pose;
    let mut clearance = f64::INFINITY;
    for k in 1..=steps {
        p = integrate(&p, v, w, cfg.dt_sim);
        let hit = grid.disc_collides(p.xy(), r) || obstacles.iter().any(|o| o.overlaps_disc(p.xy(), r));
        if hit {
            return Rollout {
                end: p,
                clearance: 0.0,
                d_col: Some(v * cfg.dt_sim * (k - 1) as f64),
            };
        }
        let mut c = grid.clearance(p.xy()) - r;
        for o in obstacles {
            c = c.min((o.center.x - p.x).hypot(o.center.y - p.y) - o.radius - r);
        }
        clearance = clearance.min(c.max(0.0));
    }
    Rollout {
        end: p,
        clearance,
        d_col: None,
    }
}

/// Picks the best admissible velocity pair for heading toward `target`.
/// Ties within 1e-12 go to the smaller |omega|, then the smaller v, then
/// positive omega.
pub fn dwa_control(
    grid: &OccupancyGrid,
    obstacles: &[DynamicObstacle],
    pose: &Pose2D,
    velocities: (f64, f64),
    target: &Pose2D,
    robot: &RobotParams,
    cfg: &DwaConfig,
) -> Result<Control, EmptyWindow> {
    let (v0, w0) = velocities;
    let (vs, ws) = window_samples(v0, w0, robot, cfg);
    let r = robot.radius + cfg.safety_margin;
    let mut scored = Vec::with_capacity(vs.len() * ws.len());
    for &v in &vs {
        for &w in &ws {
            let ro = rollout(grid, obstacles, pose, v, w, r, cfg);
            if let Some(d) = ro.d_col {
                if v > (2.0 * robot.accel_v * d).sqrt() {
                    continue;
                }
            }
            scored.push((objective(&ro.end, target, ro.clearance, v, robot, cfg), v, w));
        }
    }
    let g_max = scored.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let best =
        scored
            .iter()
            .filter(|s| s.0 >= g_max - 1e-12)
            .fold(None, |acc: Option<(f64, f64)>, &(_, v, w)| match acc {
                Some((bv, bw)) if !prefer(v, w, bv, bw) => Some((bv, bw)),
                _ => Some((v, w)),
            });
    match best {
        Some((v, w)) => Ok(Control::from_physical(v, w, robot)),
        None => {
            let v = (v0 - robot.accel_v * cfg.dt_window).max(0.0);
            let w = if v0 > 1e-9 { w0 * v / v0 } else { 0.0 };
            Err(EmptyWindow {
                braking: Control::from_physical(v, w, robot),
            })
        }
    }
}

fn prefer(v: f64, w: f64, bv: f64, bw: f64) -> bool {
    if w.abs() != bw.abs() {
        return w.abs() < bw.abs();
    }
    if v != bv {
        return v < bv;
    }
    w > bw
}

fn objective(end: &Pose2D, target: &Pose2D, clearance: f64, v: f64, robot: &RobotParams, cfg: &DwaConfig) -> f64 {
    let (dx, dy) = (target.x - end.x, target.y - end.y);
    let bearing = if dx.hypot(dy) > 1e-6 {
        dy.atan2(dx)
    } else {
        target.theta
    };
    let heading = 1.0 - wrap_angle(bearing - end.theta).abs() / std::f64::consts::PI;
    let clear = clearance.min(cfg.clearance_cap) / cfg.clearance_cap;
    cfg.alpha_heading * heading + cfg.beta_clearance * clear + cfg.gamma_velocity * v / robot.v_max
}
