//! Planner-derived conditioning signals: the discrete move label and the
//! local path-and-environment raster.

mod lpe;

use serde::{Deserialize, Serialize};

use crate::planner::{nearest_on_path, signed_curvature, PlannedPath};
use crate::world::Pose2D;

pub use lpe::{lpe, pixel_to_local, LpeIntention, AHEAD, FREE, MARKER, OCCUPIED, PALETTE, RECENT};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntentionConfig {
    pub curvature_threshold: f64,
    /// Spacing of the three curvature sample points (m).
    pub curvature_delta: f64,
    pub stop_distance: f64,
    /// Half-width of the raster window (m).
    pub window: f64,
    pub back_len: f64,
    pub fwd_len: f64,
    /// Path stroke width (pixels).
    pub stroke: f64,
    /// Raster side length (pixels).
    pub size: usize,
    /// Ring radius of the robot marker (m).
    pub marker_radius: f64,
}

impl Default for IntentionConfig {
    fn default() -> Self {
        Self {
            curvature_threshold: 0.25,
            curvature_delta: 0.4,
            stop_distance: 0.3,
            window: 3.0,
            back_len: 2.0,
            fwd_len: 4.0,
            stroke: 5.0,
            size: 224,
            marker_radius: 0.25,
        }
    }
}

impl IntentionConfig {
    pub fn validate(&self) -> Result<(), String> {
        let pos = [
            ("curvature_threshold", self.curvature_threshold),
            ("curvature_delta", self.curvature_delta),
            ("stop_distance", self.stop_distance),
            ("window", self.window),
            ("back_len", self.back_len),
            ("fwd_len", self.fwd_len),
            ("stroke", self.stroke),
            ("marker_radius", self.marker_radius),
        ];
        for (name, v) in pos {
            if !(v > 0.0) {
                return Err(format!("intention.{name} must be positive, got {v}"));
            }
        }
        if self.size < 2 {
            return Err(format!("intention.size must be >= 2, got {}", self.size));
        }
        Ok(())
    }
}

/// Discretized local move. The discriminant is the on-disk byte.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Dlm {
    TurnLeft = 0,
    TurnRight = 1,
    GoForward = 2,
    Stop = 3,
}

impl Dlm {
    pub const ALL: [Dlm; 4] = [Dlm::TurnLeft, Dlm::TurnRight, Dlm::GoForward, Dlm::Stop];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_byte(b: u8) -> Option<Dlm> {
        Self::ALL.get(b as usize).copied()
    }
}

/// Classifies the path curvature just ahead of the robot.
pub fn dlm(path: &PlannedPath, pose: &Pose2D, cfg: &IntentionConfig) -> Dlm {
    assert!(!path.is_empty(), "empty path");
    let s = nearest_on_path(path, pose);
    if path.length() - s < cfg.stop_distance {
        return Dlm::Stop;
    }
    let k = signed_curvature(path, s, cfg.curvature_delta);
    if k.abs() < cfg.curvature_threshold {
        Dlm::GoForward
    } else if k > 0.0 {
        Dlm::TurnLeft
    } else {
        Dlm::TurnRight
    }
}
