use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::world::{wrap_angle, Pose2D};

/// Pose sequence parameterized by cumulative arc length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    poses: Vec<Pose2D>,
    arclen: Vec<f64>,
}

impl PlannedPath {
    /// Builds a path from poses, measuring arc length along the polyline.
    /// Poses closer than 1e-9 m to their predecessor are dropped so arc
    /// length stays strictly increasing.
    pub fn from_poses(poses: impl IntoIterator<Item = Pose2D>) -> Self {
        let mut out: Vec<Pose2D> = Vec::new();
        let mut arclen = Vec::new();
        for p in poses {
            match out.last() {
                None => {
                    out.push(p);
                    arclen.push(0.0);
                }
                Some(prev) => {
                    let d = prev.distance(&p);
                    if d > 1e-9 {
                        arclen.push(arclen.last().unwrap() + d);
                        out.push(p);
                    }
                }
            }
        }
        Self { poses: out, arclen }
    }

    pub fn single(pose: Pose2D) -> Self {
        Self {
            poses: vec![pose],
            arclen: vec![0.0],
        }
    }

    /// Prepends a traversal history to a freshly planned path. History
    /// poses are oldest first; the plan's first pose is the current pose.
    pub fn with_history(history: &[Pose2D], plan: &PlannedPath) -> Self {
        Self::from_poses(history.iter().copied().chain(plan.poses.iter().copied()))
    }

    pub fn poses(&self) -> &[Pose2D] {
        &self.poses
    }

    pub fn arclen(&self) -> &[f64] {
        &self.arclen
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.arclen.last().copied().unwrap_or(0.0)
    }

    pub fn first(&self) -> Option<&Pose2D> {
        self.poses.first()
    }

    pub fn last(&self) -> Option<&Pose2D> {
        self.poses.last()
    }

    /// Linear interpolation of the position (and heading of the segment)
    /// at arc length `s`, clamped to the path ends.
    pub fn pose_at(&self, s: f64) -> Pose2D {
        assert!(!self.poses.is_empty(), "empty path");
        if s <= 0.0 || self.poses.len() == 1 {
            return self.poses[0];
        }
        let total = self.length();
        if s >= total {
            return *self.poses.last().unwrap();
        }
        let k = self.arclen.partition_point(|&a| a <= s);
        let (a, b) = (&self.poses[k - 1], &self.poses[k]);
        let t = (s - self.arclen[k - 1]) / (self.arclen[k] - self.arclen[k - 1]);
        Pose2D::new(
            a.x + t * (b.x - a.x),
            a.y + t * (b.y - a.y),
            a.theta + t * wrap_angle(b.theta - a.theta),
        )
    }

    /// Sub-polyline covering arc lengths `[from, to]`, with interpolated ends.
    /// Returns `(points, arclens)`.
    pub fn slice(&self, from: f64, to: f64) -> (Vec<[f64; 2]>, Vec<f64>) {
        let total = self.length();
        let from = from.clamp(0.0, total);
        let to = to.clamp(0.0, total);
        let mut pts = vec![self.pose_at(from).xy()];
        let mut s = vec![from];
        for (p, &a) in self.poses.iter().zip(&self.arclen) {
            if a > from && a < to {
                pts.push(p.xy());
                s.push(a);
            }
        }
        if to > from {
            pts.push(self.pose_at(to).xy());
            s.push(to);
        }
        (pts, s)
    }

    /// CSV rows `s,x,y,theta` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,x,y,theta\n");
        for (p, s) in self.poses.iter().zip(&self.arclen) {
            let _ = writeln!(out, "{s},{},{},{}", p.x, p.y, p.theta);
        }
        out
    }
}

/// Signed Menger curvature through the path points at arc lengths
/// `s`, `s + delta` and `s + 2 delta` (left turns positive). The triple is
/// shifted back inside the path near its end; degenerate triples give 0.
pub fn signed_curvature(path: &PlannedPath, s: f64, delta: f64) -> f64 {
    let total = path.length();
    if total <= 0.0 || delta <= 0.0 {
        return 0.0;
    }
    let delta = delta.min(total / 2.0);
    let s = s.clamp(0.0, total - 2.0 * delta);
    let p1 = path.pose_at(s).xy();
    let p2 = path.pose_at(s + delta).xy();
    let p3 = path.pose_at(s + 2.0 * delta).xy();
    menger(p1, p2, p3)
}

pub(crate) fn menger(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2]) -> f64 {
    let a = (p2[0] - p1[0]).hypot(p2[1] - p1[1]);
    let b = (p3[0] - p2[0]).hypot(p3[1] - p2[1]);
    let c = (p3[0] - p1[0]).hypot(p3[1] - p1[1]);
    let denom = a * b * c;
    if denom < 1e-12 {
        return 0.0;
    }
    let cross = (p2[0] - p1[0]) * (p3[1] - p2[1]) - (p2[1] - p1[1]) * (p3[0] - p2[0]);
    // 4 * area = 2 * |cross|
    2.0 * cross / denom
}

/// Arc length of the path vertex closest to `pose`; ties go to the
/// smaller arc length.
pub fn nearest_on_path(path: &PlannedPath, pose: &Pose2D) -> f64 {
    let mut best = f64::INFINITY;
    let mut best_s = 0.0;
    for (p, &s) in path.poses.iter().zip(&path.arclen) {
        let d = (p.x - pose.x).powi(2) + (p.y - pose.y).powi(2);
        if d < best {
            best = d;
            best_s = s;
        }
    }
    best_s
}

/// Arc length of the closest point on the polyline (segments, not just
/// vertices); ties go to the smaller arc length.
pub fn project_on_path(path: &PlannedPath, pose: &Pose2D) -> f64 {
    if path.poses.len() == 1 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    let mut best_s = 0.0;
    for k in 0..path.poses.len() - 1 {
        let (a, b) = (&path.poses[k], &path.poses[k + 1]);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len2 = dx * dx + dy * dy;
        let t = (((pose.x - a.x) * dx + (pose.y - a.y) * dy) / len2).clamp(0.0, 1.0);
        let d = (a.x + t * dx - pose.x).powi(2) + (a.y + t * dy - pose.y).powi(2);
        if d < best {
            best = d;
            best_s = path.arclen[k] + t * (path.arclen[k + 1] - path.arclen[k]);
        }
    }
    best_s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(n: usize, step: f64) -> PlannedPath {
        PlannedPath::from_poses((0..n).map(|k| Pose2D::new(k as f64 * step, 0.0, 0.0)))
    }

    #[test]
    fn collinear_is_flat() {
        assert_eq!(signed_curvature(&straight(20, 0.2), 0.5, 0.4), 0.0);
    }

    #[test]
    fn degenerate_triples_give_zero() {
        assert_eq!(menger([1.0, 1.0], [1.0, 1.0], [2.0, 0.0]), 0.0);
        assert_eq!(
            signed_curvature(&PlannedPath::single(Pose2D::new(0.0, 0.0, 0.0)), 0.0, 0.4),
            0.0
        );
    }

    #[test]
    fn curvature_clamps_at_path_end() {
        // short left arc of radius 1: any query still sees three points inside
        let pts = (0..=10).map(|k| {
            let a = k as f64 * 0.1;
            Pose2D::new(a.sin(), 1.0 - a.cos(), a)
        });
        let p = PlannedPath::from_poses(pts);
        let k = signed_curvature(&p, p.length(), 0.4);
        assert!((k - 1.0).abs() < 0.01, "{k}");
    }

    #[test]
    fn nearest_prefers_smaller_arclen_on_ties() {
        let p = straight(5, 1.0);
        assert_eq!(nearest_on_path(&p, &Pose2D::new(0.0, 0.0, 0.0)), 0.0);
        assert_eq!(nearest_on_path(&p, &Pose2D::new(1.5, 0.3, 0.0)), 1.0);
    }

    #[test]
    fn history_stitching_keeps_arclen_increasing() {
        let hist = [
            Pose2D::new(-1.0, 0.0, 0.0),
            Pose2D::new(-0.5, 0.0, 0.0),
            Pose2D::new(0.0, 0.0, 0.0),
        ];
        let p = PlannedPath::with_history(&hist, &straight(3, 0.2));
        assert_eq!(p.len(), 5);
        assert!(p.arclen().windows(2).all(|w| w[1] > w[0]));
        assert!((nearest_on_path(&p, &Pose2D::new(0.0, 0.0, 0.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_is_continuous() {
        let p = straight(5, 1.0);
        assert!((project_on_path(&p, &Pose2D::new(1.3, 0.5, 0.0)) - 1.3).abs() < 1e-12);
        assert_eq!(project_on_path(&p, &Pose2D::new(-1.0, 0.0, 0.0)), 0.0);
        assert_eq!(project_on_path(&p, &Pose2D::new(9.0, 0.0, 0.0)), 4.0);
    }

    #[test]
    fn slice_interpolates_ends() {
        let p = straight(11, 0.2);
        let (pts, s) = p.slice(0.3, 0.9);
        assert!((pts[0][0] - 0.3).abs() < 1e-12 && (pts.last().unwrap()[0] - 0.9).abs() < 1e-12);
        assert_eq!(s.len(), pts.len());
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let csv = straight(3, 0.2).to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "s,x,y,theta");
        assert_eq!(lines.len(), 4);
    }
}
