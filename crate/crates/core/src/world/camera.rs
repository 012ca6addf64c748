use serde::{Deserialize, Serialize};

use super::{DynamicObstacle, OccupancyGrid, Pose2D, WorldError};

pub const CEILING_RGB: [u8; 3] = [200, 202, 212];
pub const FLOOR_RGB: [u8; 3] = [72, 62, 52];
pub const OBSTACLE_RGB: [u8; 3] = [235, 30, 200];
const BOUNDARY_RGB: [u8; 3] = [128, 128, 128];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view (radians).
    pub fov: f64,
    pub max_range: f64,
    /// A wall at this depth (meters) fills the full image height.
    pub wall_scale: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            width: 96,
            height: 96,
            fov: 70f64.to_radians(),
            max_range: 20.0,
            wall_scale: 0.4,
        }
    }
}

impl CameraConfig {
    /// Projected wall height in rows for a perpendicular depth.
    pub fn wall_rows(&self, depth: f64) -> usize {
        let h = self.height as f64;
        (h * self.wall_scale / depth.max(1e-9)).round().min(h) as usize
    }

    /// World bearing of column `c` relative to the camera heading; column 0
    /// is the leftmost.
    pub fn column_offset(&self, c: usize) -> f64 {
        0.5 * self.fov - (c as f64 + 0.5) * self.fov / self.width as f64
    }
}

/// Camera image, `height x width x 3`, intensities in `[0, 1]`.
/// Every intensity is an exact multiple of 1/255 so the byte encoding is lossless.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub width: usize,
    pub height: usize,
    pub fov: f64,
    pub data: Vec<f32>,
}

impl Observation {
    pub fn from_bytes(width: usize, height: usize, fov: f64, bytes: &[u8]) -> Self {
        assert_eq!(bytes.len(), width * height * 3);
        Self {
            width,
            height,
            fov,
            data: bytes.iter().map(|&b| b as f32 / 255.0).collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f32; 3] {
        let k = (row * self.width + col) * 3;
        [self.data[k], self.data[k + 1], self.data[k + 2]]
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic wall texture: a muted color keyed by the cell index.
pub fn wall_color(cell_index: usize) -> [u8; 3] {
    let h = splitmix(cell_index as u64);
    let base = 110 + (h % 90) as u8;
    let tint = |shift: u32| base.saturating_add(((h >> shift) % 50) as u8);
    [tint(8), tint(16), tint(24)]
}

fn ray_circle(origin: [f64; 2], dir: [f64; 2], center: [f64; 2], r: f64) -> Option<f64> {
    let ox = origin[0] - center[0];
    let oy = origin[1] - center[1];
    let b = ox * dir[0] + oy * dir[1];
    let c = ox * ox + oy * oy - r * r;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = -b - sq;
    let t1 = -b + sq;
    if t0 > 0.0 {
        Some(t0)
    } else if t1 > 0.0 {
        Some(0.0)
    } else {
        None
    }
}

/// Renders the synthetic monocular view: one ray per column, walls drawn as a
/// vertically centered band whose height falls off with perpendicular depth.
pub fn render_camera(
    grid: &OccupancyGrid,
    obstacles: &[DynamicObstacle],
    pose: &Pose2D,
    cfg: &CameraConfig,
) -> Result<Observation, WorldError> {
    if !grid.in_bounds(pose.xy()) {
        return Err(WorldError::OutOfBounds { x: pose.x, y: pose.y });
    }
    let (w, h) = (cfg.width, cfg.height);
    let mut bytes = vec![0u8; w * h * 3];
    for c in 0..w {
        let off = cfg.column_offset(c);
        let angle = pose.theta + off;
        let dir = [angle.cos(), angle.sin()];
        let wall = grid.raycast(pose.xy(), angle, cfg.max_range);
        let mut hit: Option<(f64, [u8; 3])> = wall.map(|hit| {
            let color = match hit.cell {
                Some((i, j)) => wall_color(grid.index(i, j)),
                None => BOUNDARY_RGB,
            };
            (hit.distance, color)
        });
        for o in obstacles {
            if let Some(t) = ray_circle(pose.xy(), dir, o.center.xy(), o.radius) {
                if t <= cfg.max_range && hit.map_or(true, |(d, _)| t < d) {
                    hit = Some((t, OBSTACLE_RGB));
                }
            }
        }
        let (rows, color) = match hit {
            Some((d, color)) => (cfg.wall_rows(d * off.cos()), color),
            None => (0, CEILING_RGB),
        };
        let top = (h - rows) / 2;
        for r in 0..h {
            let rgb = if r < top {
                CEILING_RGB
            } else if r < top + rows {
                color
            } else {
                FLOOR_RGB
            };
            let k = (r * w + c) * 3;
            bytes[k..k + 3].copy_from_slice(&rgb);
        }
    }
    Ok(Observation::from_bytes(w, h, cfg.fov, &bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Cell;

    fn wall_rows_in_column(obs: &Observation, c: usize) -> usize {
        let ceil = CEILING_RGB.map(|b| b as f32 / 255.0);
        let floor = FLOOR_RGB.map(|b| b as f32 / 255.0);
        (0..obs.height)
            .filter(|&r| {
                let p = obs.pixel(r, c);
                p != ceil && p != floor
            })
            .count()
    }

    fn corridor() -> OccupancyGrid {
        // 30 m long, walls on rows 0..=9 and 24..=33, free band 1.4 m wide
        let (w, h) = (300, 34);
        let mut cells = vec![Cell::Free; w * h];
        for j in 0..h {
            if j < 10 || j >= 24 {
                for i in 0..w {
                    cells[j * w + i] = Cell::Occupied;
                }
            }
        }
        OccupancyGrid::new(w, h, 0.1, Pose2D::new(0.0, 0.0, 0.0), cells).unwrap()
    }

    #[test]
    fn corridor_view_is_left_right_symmetric() {
        let g = corridor();
        let cfg = CameraConfig::default();
        let obs = render_camera(&g, &[], &Pose2D::new(2.0, 1.7, 0.0), &cfg).unwrap();
        for c in 0..cfg.width / 2 {
            assert_eq!(
                wall_rows_in_column(&obs, c),
                wall_rows_in_column(&obs, cfg.width - 1 - c),
                "column {c}"
            );
        }
        // walls visible at the image edges
        assert!(wall_rows_in_column(&obs, 0) > 0);
    }

    #[test]
    fn facing_wall_center_height_matches_clamped_projection() {
        let mut g = OccupancyGrid::empty(40, 40, 0.1);
        for j in 0..40 {
            g = g.with_cell(30, j, Cell::Occupied);
        }
        let cfg = CameraConfig {
            wall_scale: 0.3,
            ..CameraConfig::default()
        };
        // wall face at x = 3.0, robot 0.5 m away
        let obs = render_camera(&g, &[], &Pose2D::new(2.5, 2.0, 0.0), &cfg).unwrap();
        let expected = ((cfg.height as f64) * 0.3 * (1.0 / 0.5)).round().min(cfg.height as f64);
        assert_eq!(wall_rows_in_column(&obs, cfg.width / 2), expected as usize);
        assert_eq!(wall_rows_in_column(&obs, cfg.width / 2 - 1), expected as usize);
    }

    #[test]
    fn render_is_deterministic_and_quantized() {
        let g = corridor();
        let pose = Pose2D::new(4.3, 1.6, 0.2);
        let cfg = CameraConfig::default();
        let a = render_camera(&g, &[], &pose, &cfg).unwrap();
        let b = render_camera(&g, &[], &pose, &cfg).unwrap();
        assert_eq!(a.data, b.data);
        assert!(a.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(Observation::from_bytes(a.width, a.height, a.fov, &a.to_bytes()), a);
    }

    #[test]
    fn obstacle_drawn_in_its_own_hue() {
        let g = corridor();
        let o = DynamicObstacle::new(0.3, 0.0, vec![[4.0, 1.7]]).unwrap();
        let obs = render_camera(&g, &[o], &Pose2D::new(2.0, 1.7, 0.0), &CameraConfig::default()).unwrap();
        let mid = obs.pixel(obs.height / 2, obs.width / 2);
        assert_eq!(mid, OBSTACLE_RGB.map(|b| b as f32 / 255.0));
    }

    #[test]
    fn out_of_bounds_pose_is_rejected() {
        let g = corridor();
        assert!(matches!(
            render_camera(&g, &[], &Pose2D::new(-1.0, 1.0, 0.0), &CameraConfig::default()),
            Err(WorldError::OutOfBounds { .. })
        ));
    }
}
