use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IntentionConfig;
use crate::planner::{nearest_on_path, PlannedPath};
use crate::world::{OccupancyGrid, Pose2D};

pub const FREE: u8 = 0;
pub const OCCUPIED: u8 = 1;
pub const RECENT: u8 = 2;
pub const AHEAD: u8 = 3;
pub const MARKER: u8 = 4;

/// RGB for each palette index.
pub const PALETTE: [[u8; 3]; 5] = [
    [235, 235, 235],
    [45, 45, 45],
    [220, 35, 35],
    [35, 75, 220],
    [40, 190, 80],
];

/// Robot-centric, heading-up raster stored as palette indices, row 0 at the
/// top (ahead of the robot).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpeIntention {
    pub size: usize,
    pub indices: Vec<u8>,
}

impl LpeIntention {
    pub fn from_indices(size: usize, indices: Vec<u8>) -> Option<Self> {
        (indices.len() == size * size && indices.iter().all(|&i| (i as usize) < PALETTE.len()))
            .then_some(Self { size, indices })
    }

    pub fn index_at(&self, row: usize, col: usize) -> u8 {
        self.indices[row * self.size + col]
    }

    pub fn count(&self, index: u8) -> usize {
        self.indices.iter().filter(|&&i| i == index).count()
    }

    pub fn to_rgb_bytes(&self) -> Vec<u8> {
        self.indices.iter().flat_map(|&i| PALETTE[i as usize]).collect()
    }

    /// `size x size x 3` intensities in `[0, 1]`.
    pub fn to_rgb(&self) -> Vec<f32> {
        self.to_rgb_bytes().into_iter().map(|b| b as f32 / 255.0).collect()
    }

    pub fn save_png(&self, path: &Path) -> Result<(), image::ImageError> {
        let s = self.size as u32;
        image::save_buffer(path, &self.to_rgb_bytes(), s, s, image::ColorType::Rgb8)
    }
}

/// Robot-frame point sampled by pixel `(row, col)`: `[forward, left]` in
/// meters. The image center falls on a pixel corner.
pub fn pixel_to_local(row: usize, col: usize, size: usize, window: f64) -> [f64; 2] {
    let mpp = 2.0 * window / size as f64;
    let half = size as f64 / 2.0;
    [(half - row as f64 - 0.5) * mpp, (half - col as f64 - 0.5) * mpp]
}

fn local_to_pixel(p: [f64; 2], size: usize, window: f64) -> [f64; 2] {
    // continuous (row, col) of a pixel-center lattice
    let mpp = 2.0 * window / size as f64;
    let half = size as f64 / 2.0;
    [half - 0.5 - p[0] / mpp, half - 0.5 - p[1] / mpp]
}

/// Rasterizes the local map and path around `pose`. Path pixels are colored
/// by the arc length of the nearest path point: behind the robot's
/// projection is red, ahead is blue.
pub fn lpe(path: &PlannedPath, pose: &Pose2D, grid: &OccupancyGrid, cfg: &IntentionConfig) -> LpeIntention {
    let n = cfg.size;
    let mpp = 2.0 * cfg.window / n as f64;
    let mut img = vec![FREE; n * n];
    for r in 0..n {
        for c in 0..n {
            let w = pose.to_world(pixel_to_local(r, c, n, cfg.window));
            if grid.is_blocked_at(w) {
                img[r * n + c] = OCCUPIED;
            }
        }
    }

    let ring = cfg.marker_radius / mpp;
    for r in 0..n {
        for c in 0..n {
            let dr = r as f64 + 0.5 - n as f64 / 2.0;
            let dc = c as f64 + 0.5 - n as f64 / 2.0;
            if (dr.hypot(dc) - ring).abs() <= 0.5 {
                img[r * n + c] = MARKER;
            }
        }
    }

    if !path.is_empty() {
        let s0 = nearest_on_path(path, pose);
        let (pts, arcs) = path.slice(s0 - cfg.back_len, s0 + cfg.fwd_len);
        let px: Vec<[f64; 2]> = pts
            .iter()
            .map(|&p| local_to_pixel(pose.to_local(p), n, cfg.window))
            .collect();
        let half = 0.5 * cfg.stroke;
        let mut best_d = vec![f64::INFINITY; n * n];
        let mut best_s = vec![0.0; n * n];
        let segs: Vec<(usize, usize)> = if px.len() == 1 {
            vec![(0, 0)]
        } else {
            (0..px.len() - 1).map(|k| (k, k + 1)).collect()
        };
        for (a, b) in segs {
            let (pa, pb) = (px[a], px[b]);
            let r0 = (pa[0].min(pb[0]) - half).floor().max(0.0) as usize;
            let r1 = (pa[0].max(pb[0]) + half).ceil().min(n as f64 - 1.0);
            let c0 = (pa[1].min(pb[1]) - half).floor().max(0.0) as usize;
            let c1 = (pa[1].max(pb[1]) + half).ceil().min(n as f64 - 1.0);
            if r1 < 0.0 || c1 < 0.0 {
                continue;
            }
            let (d0, d1) = (pb[0] - pa[0], pb[1] - pa[1]);
            let len2 = d0 * d0 + d1 * d1;
            for r in r0..=r1 as usize {
                for c in c0..=c1 as usize {
                    let (qr, qc) = (r as f64 - pa[0], c as f64 - pa[1]);
                    let t = if len2 > 0.0 {
                        ((qr * d0 + qc * d1) / len2).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                    let d = (qr - t * d0).hypot(qc - t * d1);
                    let k = r * n + c;
                    if d < best_d[k] {
                        best_d[k] = d;
                        best_s[k] = arcs[a] + t * (arcs[b] - arcs[a]);
                    }
                }
            }
        }
        for k in 0..n * n {
            if best_d[k] <= half {
                img[k] = if best_s[k] < s0 { RECENT } else { AHEAD };
            }
        }
    }
    LpeIntention { size: n, indices: img }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Cell;

    fn cfg(size: usize) -> IntentionConfig {
        IntentionConfig {
            size,
            back_len: 2.0,
            fwd_len: 2.0,
            ..IntentionConfig::default()
        }
    }

    fn line(y: f64, theta: f64) -> PlannedPath {
        let (s, c) = theta.sin_cos();
        PlannedPath::from_poses((0..=60).map(|k| {
            let t = k as f64 * 0.2 - 6.0;
            Pose2D::new(5.0 + t * c, y + t * s, theta)
        }))
    }

    #[test]
    fn straight_path_is_symmetric_red_and_blue() {
        let g = OccupancyGrid::empty(100, 100, 0.1);
        let img = lpe(&line(5.0, 0.0), &Pose2D::new(5.0, 5.0, 0.0), &g, &cfg(96));
        assert_eq!(img.count(OCCUPIED), 0);
        let (red, blue) = (img.count(RECENT), img.count(AHEAD));
        assert!(red > 0);
        assert_eq!(red, blue);
        // red below center, blue above
        assert_eq!(img.index_at(60, 47), RECENT);
        assert_eq!(img.index_at(30, 47), AHEAD);
        let center = img.index_at(48, 48);
        assert!(center == RECENT || center == AHEAD);
    }

    #[test]
    fn heading_up_is_rotation_invariant() {
        let c = cfg(64);
        let mut g = OccupancyGrid::empty(120, 120, 0.1);
        for i in 20..50 {
            g = g.with_cell(i, 70, Cell::Occupied);
        }
        let pose = Pose2D::new(4.013, 6.027, 0.3);
        let path = PlannedPath::from_poses((0..30).map(|k| pose.compose(k as f64 * 0.2 - 2.0, 0.0, 0.0)));
        let a = lpe(&path, &pose, &g, &c);

        // rotate the entire world (map origin, path, pose) by 90 degrees
        let q = std::f64::consts::FRAC_PI_2;
        let rot = |p: &Pose2D| Pose2D::new(-p.y, p.x, p.theta + q);
        let o = g.origin();
        let g2 = OccupancyGrid::new(g.width(), g.height(), g.resolution(), rot(&o), g.cells().to_vec()).unwrap();
        let path2 = PlannedPath::from_poses(path.poses().iter().map(rot));
        let b = lpe(&path2, &rot(&pose), &g2, &c);
        assert_eq!(a, b);
        assert!(a.count(OCCUPIED) > 0);
    }

    #[test]
    fn outside_map_is_occupied() {
        let g = OccupancyGrid::empty(20, 20, 0.1);
        let img = lpe(
            &PlannedPath::single(Pose2D::new(1.0, 1.0, 0.0)),
            &Pose2D::new(1.0, 1.0, 0.0),
            &g,
            &cfg(64),
        );
        assert!(img.count(OCCUPIED) > 64 * 64 / 2);
        assert!(img.indices.iter().all(|&i| (i as usize) < PALETTE.len()));
    }

    #[test]
    fn png_export_roundtrips_size() {
        let g = OccupancyGrid::empty(100, 100, 0.1);
        let img = lpe(&line(5.0, 0.0), &Pose2D::new(5.0, 5.0, 0.0), &g, &cfg(32));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lpe.png");
        img.save_png(&p).unwrap();
        assert!(std::fs::metadata(&p).unwrap().len() > 0);
    }
}
