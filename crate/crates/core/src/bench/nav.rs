use crate::intention::{dlm, lpe, Dlm, IntentionConfig, LpeIntention};
use crate::planner::{PlanError, PlannedPath, Planner, PlannerConfig};
use crate::world::{OccupancyGrid, Pose2D};

/// Replanning front end shared by data collection and the closed loop:
/// plans from the pose estimate every step, falls back to the previous path
/// when planning fails, and keeps the traversed history that intentions
/// are drawn from.
pub struct Navigator<'a> {
    planner: Planner<'a>,
    goal: Option<Pose2D>,
    final_goal: bool,
    path: Option<PlannedPath>,
    history: Vec<Pose2D>,
    spacing: f64,
    max_history: usize,
    /// Steps on which planning failed and the previous path was reused.
    pub fallbacks: usize,
}

impl<'a> Navigator<'a> {
    pub fn new(grid: &'a OccupancyGrid, cfg: PlannerConfig, history_spacing: f64) -> Self {
        Self {
            planner: Planner::new(grid, cfg),
            goal: None,
            final_goal: true,
            path: None,
            history: Vec::new(),
            spacing: history_spacing,
            max_history: 200,
            fallbacks: 0,
        }
    }

    pub fn planner(&mut self) -> &mut Planner<'a> {
        &mut self.planner
    }

    /// Sets the next goal. Only the last goal of a task produces the stop
    /// intention; intermediate goals are driven through.
    pub fn set_goal(&mut self, goal: Pose2D, is_final: bool) {
        self.goal = Some(goal);
        self.final_goal = is_final;
        self.path = None;
    }

    pub fn goal(&self) -> Option<Pose2D> {
        self.goal
    }

    pub fn clear_history(&mut self) {
        self.history.clear();
    }

    /// Appends `pose` to the history once it is `history_spacing` from the
    /// last entry.
    pub fn record(&mut self, pose: &Pose2D) {
        if self.history.last().map_or(true, |h| h.distance(pose) >= self.spacing) {
            self.history.push(*pose);
            if self.history.len() > self.max_history {
                let cut = self.history.len() - self.max_history;
                self.history.drain(..cut);
            }
        }
    }

    /// Replans from `est`; the returned path ends exactly at the goal. On failure the previous path is kept; with no
    /// previous path the error is returned.
    pub fn update(&mut self, est: &Pose2D) -> Result<&PlannedPath, PlanError> {
        let goal = self.goal.expect("navigator has no goal");
        match self.planner.plan(est, &goal) {
            // the search stops within tolerance; finish at the goal itself
            Ok(p) => self.path = Some(PlannedPath::from_poses(p.poses().iter().copied().chain([goal]))),
            Err(e) => {
                if self.path.is_none() {
                    return Err(e);
                }
                self.fallbacks += 1;
            }
        }
        Ok(self.path.as_ref().unwrap())
    }

    pub fn path(&self) -> Option<&PlannedPath> {
        self.path.as_ref()
    }

    /// History followed by the current plan.
    pub fn stitched(&self) -> PlannedPath {
        match &self.path {
            Some(p) => PlannedPath::with_history(&self.history, p),
            None => PlannedPath::from_poses(self.history.iter().copied()),
        }
    }

    /// Both intention encodings at pose `est`.
    pub fn intentions(&self, est: &Pose2D, cfg: &IntentionConfig) -> (Dlm, LpeIntention) {
        let path = self.stitched();
        let path = if path.is_empty() {
            PlannedPath::single(*est)
        } else {
            path
        };
        let d = if self.final_goal {
            dlm(&path, est, cfg)
        } else {
            let through = IntentionConfig {
                stop_distance: 0.0,
                ..*cfg
            };
            dlm(&path, est, &through)
        };
        (d, lpe(&path, est, self.planner.grid(), cfg))
    }
}
