//! Fixtures shared by the criterion benches.

use intentnav::bench::{generate, junction_task, CorridorMap, Family, RunConfig, TaskSpec};
use intentnav::planner::{PlannedPath, Planner};

pub struct Fixture {
    pub map: CorridorMap,
    pub task: TaskSpec,
    pub cfg: RunConfig,
    pub path: PlannedPath,
}

/// The family-A junction task with its planned start-to-first-goal path.
pub fn junction() -> Fixture {
    let map = generate(Family::A, 100);
    let task = junction_task(&map);
    let cfg = RunConfig::desk();
    let path = Planner::new(&map.grid, cfg.planner.clone())
        .plan(&task.start, &task.goals[0])
        .expect("junction task is plannable");
    Fixture { map, task, cfg, path }
}
