//! Occupancy maps, differential-drive simulation and the synthetic camera.

mod camera;
mod grid;
mod pose;
mod sim;

use std::path::PathBuf;

pub use camera::{render_camera, wall_color, CameraConfig, Observation, CEILING_RGB, FLOOR_RGB, OBSTACLE_RGB};
pub use grid::{load_map, sidecar_path, Cell, OccupancyGrid, RayHit};
pub use pose::{wrap_angle, Control, Pose2D, RobotParams};
pub use sim::{format_scene, integrate, limit_accel, load_scene, parse_scene, DynamicObstacle, SimState, Simulator};

#[derive(Debug, thiserror::Error)]
pub enum WorldError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed map header: {0}")]
    MalformedHeader(String),
    #[error("map payload has {found} cells, header declares {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("bad map sidecar: {0}")]
    Sidecar(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("bad scene: {0}")]
    Scene(String),
    #[error("pose ({x:.3}, {y:.3}) is outside the map")]
    OutOfBounds { x: f64, y: f64 },
}
