use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::PlannedPath;
use crate::world::{wrap_angle, OccupancyGrid, Pose2D};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Spatial bin size for duplicate detection (m).
    pub xy_resolution: f64,
    pub theta_bins: usize,
    /// Arc length of every motion primitive (m).
    pub step: f64,
    /// Primitive curvatures (1/m).
    pub steering_set: Vec<f64>,
    pub turn_penalty: f64,
    pub goal_tol_xy: f64,
    pub goal_tol_theta: f64,
    pub max_expansions: usize,
    /// Disc radius used for collision checks (m).
    pub robot_radius: f64,
    /// Extra cost per meter spent closer than `comfort_clearance` to a wall,
    /// scaled linearly by the intrusion. Zero disables it.
    pub clearance_weight: f64,
    pub comfort_clearance: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self::with_kappa_max(2.0)
    }
}

impl PlannerConfig {
    /// Defaults with the five-primitive steering set `{-k, -k/2, 0, k/2, k}`.
    pub fn with_kappa_max(k: f64) -> Self {
        Self {
            xy_resolution: 0.1,
            theta_bins: 36,
            step: 0.2,
            steering_set: vec![-k, -k / 2.0, 0.0, k / 2.0, k],
            turn_penalty: 0.05,
            goal_tol_xy: 0.25,
            goal_tol_theta: 30f64.to_radians(),
            max_expansions: 200_000,
            robot_radius: 0.25,
            clearance_weight: 3.0,
            comfort_clearance: 0.75,
        }
    }

    pub fn validate(&self, kappa_limit: f64) -> Result<(), PlanError> {
        let bad = |m: String| Err(PlanError::InvalidConfig(m));
        if self.theta_bins < 8 {
            return bad(format!("theta_bins must be >= 8, got {}", self.theta_bins));
        }
        if !(self.xy_resolution > 0.0) || self.step < self.xy_resolution {
            return bad(format!(
                "need 0 < xy_resolution <= step, got {} / {}",
                self.xy_resolution, self.step
            ));
        }
        if self.steering_set.is_empty() {
            return bad("empty steering set".into());
        }
        if let Some(k) = self.steering_set.iter().find(|k| k.abs() > kappa_limit + 1e-12) {
            return bad(format!("curvature {k} exceeds robot limit {kappa_limit}"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoPathReason {
    StartInCollision,
    GoalBlocked,
    GoalOutOfBounds,
    Unreachable,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("no path: {0:?}")]
    NoPath(NoPathReason),
    #[error("search budget of {0} expansions exhausted")]
    Timeout(usize),
    #[error("invalid planner config: {0}")]
    InvalidConfig(String),
}

/// End pose of an exact arc of curvature `kappa` and length `len`.
pub fn arc_end(p: &Pose2D, kappa: f64, len: f64) -> Pose2D {
    if kappa.abs() < 1e-12 {
        let (s, c) = p.theta.sin_cos();
        return Pose2D::new(p.x + len * c, p.y + len * s, p.theta);
    }
    let th = p.theta + kappa * len;
    Pose2D::new(
        p.x + (th.sin() - p.theta.sin()) / kappa,
        p.y - (th.cos() - p.theta.cos()) / kappa,
        th,
    )
}

#[derive(Clone, Copy)]
struct Node {
    pose: Pose2D,
    g: f64,
    kappa: f64,
    parent: u32,
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    seq: u64,
    node: u32,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, FIFO among equal f
        other.f.total_cmp(&self.f).then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Hybrid A* over `(x, y, theta)` with forward arc primitives. Keeps the
/// 2-D distance-to-goal field cached across calls with the same goal cell.
pub struct Planner<'a> {
    grid: &'a OccupancyGrid,
    cfg: PlannerConfig,
    robot_free: Option<Vec<bool>>,
    field: Option<(usize, Vec<f64>)>,
    nx: usize,
    ny: usize,
    closed: Vec<u32>,
    best_g: Vec<f64>,
    seen: Vec<u32>,
    generation: u32,
}

impl<'a> Planner<'a> {
    pub fn new(grid: &'a OccupancyGrid, cfg: PlannerConfig) -> Self {
        let nx = ((grid.width() as f64 * grid.resolution()) / cfg.xy_resolution).ceil() as usize;
        let ny = ((grid.height() as f64 * grid.resolution()) / cfg.xy_resolution).ceil() as usize;
        let bins = nx * ny * cfg.theta_bins;
        Self {
            grid,
            cfg,
            robot_free: None,
            field: None,
            nx,
            ny,
            closed: vec![0; bins],
            best_g: vec![0.0; bins],
            seen: vec![0; bins],
            generation: 0,
        }
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &OccupancyGrid {
        self.grid
    }

    pub fn pose_collides(&self, p: &Pose2D) -> bool {
        self.grid.disc_collides(p.xy(), self.cfg.robot_radius)
    }

    fn robot_free(&mut self) -> &[bool] {
        if self.robot_free.is_none() {
            let g = self.grid;
            let r = self.cfg.robot_radius;
            let mut free = Vec::with_capacity(g.width() * g.height());
            for j in 0..g.height() {
                for i in 0..g.width() {
                    free.push(!g.disc_collides(g.cell_to_world(i, j), r));
                }
            }
            self.robot_free = Some(free);
        }
        self.robot_free.as_deref().unwrap()
    }

    /// Obstacle-aware 8-connected Dijkstra distance (m) from every cell
    /// center to the goal, over cells where the robot disc fits.
    pub fn distance_field(&mut self, goal: &Pose2D) -> Option<&[f64]> {
        let (gi, gj) = self.grid.world_to_cell(goal.xy())?;
        let g = self.grid;
        let goal_idx = g.index(gi, gj);
        if self.field.as_ref().map(|(k, _)| *k) != Some(goal_idx) {
            let free = self.robot_free().to_vec();
            let (w, h) = (g.width(), g.height());
            let res = g.resolution();
            let mut dist = vec![f64::INFINITY; w * h];
            let mut heap = BinaryHeap::new();
            let c = g.cell_to_world(gi, gj);
            dist[goal_idx] = (c[0] - goal.x).hypot(c[1] - goal.y);
            heap.push(Open {
                f: dist[goal_idx],
                seq: goal_idx as u64,
                node: goal_idx as u32,
            });
            while let Some(Open { f, node, .. }) = heap.pop() {
                let idx = node as usize;
                if f > dist[idx] {
                    continue;
                }
                let (i, j) = ((idx % w) as i64, (idx / w) as i64);
                for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)] {
                    let (ni, nj) = (i + di, j + dj);
                    if ni < 0 || nj < 0 || ni >= w as i64 || nj >= h as i64 {
                        continue;
                    }
                    let n = nj as usize * w + ni as usize;
                    if !free[n] {
                        continue;
                    }
                    let step = if di != 0 && dj != 0 {
                        res * std::f64::consts::SQRT_2
                    } else {
                        res
                    };
                    let nd = f + step;
                    if nd < dist[n] {
                        dist[n] = nd;
                        heap.push(Open {
                            f: nd,
                            seq: n as u64,
                            node: n as u32,
                        });
                    }
                }
            }
            self.field = Some((goal_idx, dist));
        }
        self.field.as_ref().map(|(_, d)| d.as_slice())
    }

    fn bin(&self, p: &Pose2D) -> Option<usize> {
        let m = self.grid.to_map_frame(p.xy());
        let ix = (m[0] / self.cfg.xy_resolution).floor();
        let iy = (m[1] / self.cfg.xy_resolution).floor();
        if ix < 0.0 || iy < 0.0 || ix >= self.nx as f64 || iy >= self.ny as f64 {
            return None;
        }
        let local = p.theta - self.grid.origin().theta;
        let tb = self.cfg.theta_bins;
        let it = ((wrap_angle(local) + std::f64::consts::PI) / (2.0 * std::f64::consts::PI) * tb as f64).floor()
            as usize
            % tb;
        Some(((iy as usize) * self.nx + ix as usize) * tb + it)
    }

    fn at_goal(&self, p: &Pose2D, goal: &Pose2D) -> bool {
        p.distance(goal) <= self.cfg.goal_tol_xy && wrap_angle(p.theta - goal.theta).abs() <= self.cfg.goal_tol_theta
    }

    /// Samples along a primitive; `None` on collision, else the minimum
    /// clearance seen and the end pose.
    fn expand(&self, from: &Pose2D, kappa: f64) -> Option<(Pose2D, f64)> {
        let n = (self.cfg.step / (0.5 * self.grid.resolution())).ceil().max(1.0) as usize;
        let mut min_clear = f64::INFINITY;
        let mut end = *from;
        for k in 1..=n {
            let p = arc_end(from, kappa, self.cfg.step * k as f64 / n as f64);
            if self.pose_collides(&p) {
                return None;
            }
            min_clear = min_clear.min(self.grid.clearance(p.xy()));
            end = p;
        }
        Some((end, min_clear))
    }

    pub fn plan(&mut self, start: &Pose2D, goal: &Pose2D) -> Result<PlannedPath, PlanError> {
        if !self.grid.in_bounds(goal.xy()) {
            return Err(PlanError::NoPath(NoPathReason::GoalOutOfBounds));
        }
        if self.pose_collides(start) {
            return Err(PlanError::NoPath(NoPathReason::StartInCollision));
        }
        if self.pose_collides(goal) || self.grid.is_blocked_at(goal.xy()) {
            return Err(PlanError::NoPath(NoPathReason::GoalBlocked));
        }
        if self.at_goal(start, goal) {
            return Ok(PlannedPath::single(*start));
        }
        let field = self
            .distance_field(goal)
            .ok_or(PlanError::NoPath(NoPathReason::GoalOutOfBounds))?
            .to_vec();
        let grid = self.grid;
        let h = |p: &Pose2D| -> f64 {
            let e = p.distance(goal);
            match grid.world_to_cell(p.xy()) {
                Some((i, j)) => e.max(field[grid.index(i, j)]),
                None => f64::INFINITY,
            }
        };
        let h0 = h(start);
        if !h0.is_finite() {
            return Err(PlanError::NoPath(NoPathReason::Unreachable));
        }

        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.closed.fill(0);
            self.seen.fill(0);
            self.generation = 1;
        }
        let gen = self.generation;
        let mut nodes = vec![Node {
            pose: *start,
            g: 0.0,
            kappa: 0.0,
            parent: u32::MAX,
        }];
        let mut open = BinaryHeap::new();
        let mut seq = 0u64;
        open.push(Open { f: h0, seq, node: 0 });
        let mut expansions = 0usize;
        let steering = self.cfg.steering_set.clone();

        while let Some(Open { node, .. }) = open.pop() {
            let cur = nodes[node as usize];
            let Some(bin) = self.bin(&cur.pose) else { continue };
            if self.closed[bin] == gen {
                continue;
            }
            self.closed[bin] = gen;
            if self.at_goal(&cur.pose, goal) {
                return Ok(self.reconstruct(&nodes, node));
            }
            expansions += 1;
            if expansions > self.cfg.max_expansions {
                return Err(PlanError::Timeout(self.cfg.max_expansions));
            }
            for &kappa in &steering {
                let Some((next, clear)) = self.expand(&cur.pose, kappa) else {
                    continue;
                };
                let Some(nb) = self.bin(&next) else { continue };
                if self.closed[nb] == gen {
                    continue;
                }
                let mut cost = self.cfg.step + self.cfg.turn_penalty * (kappa - cur.kappa).abs();
                if self.cfg.clearance_weight > 0.0 && clear < self.cfg.comfort_clearance {
                    cost += self.cfg.step * self.cfg.clearance_weight * (self.cfg.comfort_clearance - clear)
                        / self.cfg.comfort_clearance;
                }
                let g = cur.g + cost;
                if self.seen[nb] == gen && self.best_g[nb] <= g {
                    continue;
                }
                let hn = h(&next);
                if !hn.is_finite() {
                    continue;
                }
                self.seen[nb] = gen;
                self.best_g[nb] = g;
                nodes.push(Node {
                    pose: next,
                    g,
                    kappa,
                    parent: node,
                });
                seq += 1;
                open.push(Open {
                    f: g + hn,
                    seq,
                    node: (nodes.len() - 1) as u32,
                });
            }
        }
        Err(PlanError::NoPath(NoPathReason::Unreachable))
    }

    fn reconstruct(&self, nodes: &[Node], mut idx: u32) -> PlannedPath {
        let mut poses = Vec::new();
        while idx != u32::MAX {
            let n = &nodes[idx as usize];
            poses.push(n.pose);
            idx = n.parent;
        }
        poses.reverse();
        PlannedPath::from_poses(poses)
    }
}

/// One-shot planning without a persistent cache.
pub fn plan(
    grid: &OccupancyGrid,
    start: &Pose2D,
    goal: &Pose2D,
    cfg: &PlannerConfig,
) -> Result<PlannedPath, PlanError> {
    Planner::new(grid, cfg.clone()).plan(start, goal)
}
