//! Kinematically feasible global planning and path geometry.

mod hybrid_astar;
mod path;

pub use hybrid_astar::{arc_end, plan, NoPathReason, PlanError, Planner, PlannerConfig};
pub use path::{nearest_on_path, project_on_path, signed_curvature, PlannedPath};
