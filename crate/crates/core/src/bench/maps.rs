use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::world::{Cell, OccupancyGrid, Pose2D};

use super::BenchError;

/// Corridor-map families. A: small loop with one T-junction. B, C: office
/// grids with increasing junction counts. D, E: random mazes, E held out of
/// training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    C,
    D,
    E,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::A, Family::B, Family::C, Family::D, Family::E];
    pub const TRAINING: [Family; 3] = [Family::A, Family::B, Family::C];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
            Family::D => "D",
            Family::E => "E",
        };
        f.write_str(c)
    }
}

impl FromStr for Family {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(Family::A),
            "B" => Ok(Family::B),
            "C" => Ok(Family::C),
            "D" => Ok(Family::D),
            "E" => Ok(Family::E),
            _ => Err(BenchError::Config(format!("unknown map family `{s}`"))),
        }
    }
}

/// Occupancy map carved from a corridor graph on a square lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct CorridorMap {
    pub id: String,
    pub family: Family,
    pub grid: OccupancyGrid,
    /// Node centers in world coordinates.
    pub nodes: Vec<[f64; 2]>,
    pub edges: Vec<(usize, usize)>,
    /// Free corridor width (m).
    pub width: f64,
}

pub const RESOLUTION: f64 = 0.1;
const MARGIN: f64 = 1.5;

impl CorridorMap {
    /// Carves axis-aligned corridors of width `width` along each edge of the
    /// lattice graph; `lattice` holds integer node coordinates.
    pub fn carve(
        id: &str,
        family: Family,
        lattice: &[(i32, i32)],
        edges: &[(usize, usize)],
        spacing: f64,
        width: f64,
    ) -> Self {
        let max_i = lattice.iter().map(|n| n.0).max().unwrap_or(0) as f64;
        let max_j = lattice.iter().map(|n| n.1).max().unwrap_or(0) as f64;
        let w = ((max_i * spacing + 2.0 * MARGIN) / RESOLUTION).round() as usize;
        let h = ((max_j * spacing + 2.0 * MARGIN) / RESOLUTION).round() as usize;
        let nodes: Vec<[f64; 2]> = lattice
            .iter()
            .map(|&(i, j)| [MARGIN + i as f64 * spacing, MARGIN + j as f64 * spacing])
            .collect();
        let mut cells = vec![Cell::Occupied; w * h];
        let half = width / 2.0;
        for &(a, b) in edges {
            let (pa, pb) = (nodes[a], nodes[b]);
            let x0 = pa[0].min(pb[0]) - half;
            let x1 = pa[0].max(pb[0]) + half;
            let y0 = pa[1].min(pb[1]) - half;
            let y1 = pa[1].max(pb[1]) + half;
            for j in 0..h {
                let y = (j as f64 + 0.5) * RESOLUTION;
                if y < y0 || y > y1 {
                    continue;
                }
                for i in 0..w {
                    let x = (i as f64 + 0.5) * RESOLUTION;
                    if x >= x0 && x <= x1 {
                        cells[j * w + i] = Cell::Free;
                    }
                }
            }
        }
        let grid = OccupancyGrid::new(w, h, RESOLUTION, Pose2D::new(0.0, 0.0, 0.0), cells)
            .expect("carved grid dimensions are consistent");
        Self {
            id: id.to_string(),
            family,
            grid,
            nodes,
            edges: edges.to_vec(),
            width,
        }
    }

    pub fn neighbors(&self, n: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == n {
                    Some(b)
                } else if b == n {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn degree(&self, n: usize) -> usize {
        self.neighbors(n).len()
    }

    /// Heading of travel from node `a` toward node `b`.
    pub fn heading(&self, a: usize, b: usize) -> f64 {
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        (pb[1] - pa[1]).atan2(pb[0] - pa[0])
    }

    /// Pose a fraction `t` of the way from node `a` to node `b`, facing `b`.
    pub fn edge_pose(&self, a: usize, b: usize, t: f64) -> Pose2D {
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        Pose2D::new(
            pa[0] + t * (pb[0] - pa[0]),
            pa[1] + t * (pb[1] - pa[1]),
            self.heading(a, b),
        )
    }
}

/// Node indices of the family-A layout.
pub mod layout_a {
    pub const BL: usize = 0;
    pub const BM: usize = 1;
    pub const TL: usize = 2;
    pub const TM: usize = 3;
    pub const TR: usize = 4;
}

fn lattice_grid(nx: i32, ny: i32) -> Vec<(i32, i32)> {
    let mut v = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            v.push((i, j));
        }
    }
    v
}

fn full_edges(nx: i32, ny: i32) -> Vec<(usize, usize)> {
    let id = |i: i32, j: i32| (j * nx + i) as usize;
    let mut e = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if i + 1 < nx {
                e.push((id(i, j), id(i + 1, j)));
            }
            if j + 1 < ny {
                e.push((id(i, j), id(i, j + 1)));
            }
        }
    }
    e
}

/// Spanning tree of the lattice by randomized depth-first search.
fn maze_edges(nx: i32, ny: i32, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let n = (nx * ny) as usize;
    let id = |i: i32, j: i32| (j * nx + i) as usize;
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut edges = Vec::new();
    while let Some(&cur) = stack.last() {
        let (i, j) = ((cur as i32) % nx, (cur as i32) / nx);
        let mut next: Vec<usize> = [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .iter()
            .map(|(di, dj)| (i + di, j + dj))
            .filter(|&(a, b)| a >= 0 && b >= 0 && a < nx && b < ny)
            .map(|(a, b)| id(a, b))
            .filter(|&k| !seen[k])
            .collect();
        if next.is_empty() {
            stack.pop();
            continue;
        }
        next.shuffle(rng);
        let k = next[0];
        seen[k] = true;
        edges.push((cur.min(k), cur.max(k)));
        stack.push(k);
    }
    edges
}

/// Map `variant` of a family. Spacing and corridor width are jittered per
/// variant; maze layouts are drawn per variant.
pub fn generate(family: Family, variant: u64) -> CorridorMap {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d61_7073 ^ ((family as u64) << 32) ^ variant);
    let spacing = rng.gen_range(4.5..5.5);
    let width = rng.gen_range(1.4..1.6);
    let id = format!("{family}{variant}");
    match family {
        Family::A => {
            let lattice = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 1)];
            use layout_a::*;
            let edges = [(BL, BM), (BL, TL), (TL, TM), (TM, TR), (BM, TM)];
            CorridorMap::carve(&id, family, &lattice, &edges, spacing, width)
        }
        Family::B => CorridorMap::carve(&id, family, &lattice_grid(3, 2), &full_edges(3, 2), spacing, width),
        Family::C => CorridorMap::carve(&id, family, &lattice_grid(3, 3), &full_edges(3, 3), spacing, width),
        Family::D => {
            let edges = maze_edges(3, 3, &mut rng);
            CorridorMap::carve(&id, family, &lattice_grid(3, 3), &edges, spacing * 0.8, width)
        }
        Family::E => {
            let edges = maze_edges(4, 4, &mut rng);
            CorridorMap::carve(&id, family, &lattice_grid(4, 4), &edges, spacing * 0.8, width)
        }
    }
}
