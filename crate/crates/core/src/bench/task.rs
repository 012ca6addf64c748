use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::world::{format_scene, load_scene, parse_scene, DynamicObstacle, Pose2D};

use super::maps::{generate, layout_a, CorridorMap, Family};
use super::BenchError;

/// A navigation task: visit `goals` in order from `start`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub id: String,
    pub map_id: String,
    /// Scene file name (relative to the task file); empty for none.
    pub scene: String,
    pub obstacles: Vec<DynamicObstacle>,
    pub start: Pose2D,
    pub goals: Vec<Pose2D>,
    /// Wall-clock budget of the whole task (s).
    pub time_limit: f64,
}

impl TaskSpec {
    /// Line format:
    /// `task <id>` / `map <id>` / `scene <file>` / `start x y theta` /
    /// `goal x y theta` (repeated) / `time_limit seconds`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "task {}", self.id);
        let _ = writeln!(s, "map {}", self.map_id);
        if !self.scene.is_empty() {
            let _ = writeln!(s, "scene {}", self.scene);
        }
        let _ = writeln!(s, "start {} {} {}", self.start.x, self.start.y, self.start.theta);
        for g in &self.goals {
            let _ = writeln!(s, "goal {} {} {}", g.x, g.y, g.theta);
        }
        let _ = writeln!(s, "time_limit {}", self.time_limit);
        s
    }

    /// Parses the task text; the scene (if named) is resolved by `scene`.
    pub fn parse(
        text: &str,
        scene: impl Fn(&str) -> Result<Vec<DynamicObstacle>, BenchError>,
    ) -> Result<Self, BenchError> {
        let bad = |n: usize, m: &str| BenchError::Task(format!("line {}: {m}", n + 1));
        let mut t = TaskSpec {
            id: String::new(),
            map_id: String::new(),
            scene: String::new(),
            obstacles: Vec::new(),
            start: Pose2D::new(0.0, 0.0, 0.0),
            goals: Vec::new(),
            time_limit: 0.0,
        };
        let mut have_start = false;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let key = it.next().unwrap();
            let rest: Vec<&str> = it.collect();
            let pose = |rest: &[&str]| -> Result<Pose2D, BenchError> {
                if rest.len() != 3 {
                    return Err(bad(n, "expected x y theta"));
                }
                let v: Result<Vec<f64>, _> = rest.iter().map(|s| s.parse::<f64>()).collect();
                let v = v.map_err(|_| bad(n, "non-numeric pose"))?;
                Ok(Pose2D::new(v[0], v[1], v[2]))
            };
            match key {
                "task" => t.id = rest.join(" "),
                "map" => t.map_id = rest.join(" "),
                "scene" => t.scene = rest.join(" "),
                "start" => {
                    t.start = pose(&rest)?;
                    have_start = true;
                }
                "goal" => t.goals.push(pose(&rest)?),
                "time_limit" => {
                    t.time_limit = rest
                        .first()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad(n, "bad time limit"))?
                }
                _ => return Err(bad(n, &format!("unknown key `{key}`"))),
            }
        }
        if t.id.is_empty() || t.map_id.is_empty() || !have_start || t.goals.is_empty() || !(t.time_limit > 0.0) {
            return Err(BenchError::Task(
                "task needs id, map, start, goals and a positive time_limit".into(),
            ));
        }
        if !t.scene.is_empty() {
            t.obstacles = scene(&t.scene)?;
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, |name| {
            load_scene(&dir.join(name)).map_err(|e| BenchError::Task(e.to_string()))
        })
    }

    /// Writes the task file and, if it has obstacles, its scene file next to it.
    pub fn save(&self, path: &Path) -> Result<(), BenchError> {
        let io = |e: std::io::Error| BenchError::Io(format!("{}: {e}", path.display()));
        fs::write(path, self.to_text()).map_err(io)?;
        if !self.scene.is_empty() {
            let dir = path.parent().unwrap_or(Path::new("."));
            fs::write(dir.join(&self.scene), format_scene(&self.obstacles)).map_err(io)?;
        }
        Ok(())
    }

    /// Parses task text whose scene (if any) is given inline as text.
    pub fn parse_with_scene_text(text: &str, scene_text: &str) -> Result<Self, BenchError> {
        Self::parse(text, |_| {
            parse_scene(scene_text).map_err(|e| BenchError::Task(e.to_string()))
        })
    }
}

/// Node walk without immediate reversals, starting along `first`.
fn random_walk(map: &CorridorMap, first: (usize, usize), edges: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut walk = vec![first.0, first.1];
    while walk.len() < edges + 1 {
        let (prev, cur) = (walk[walk.len() - 2], walk[walk.len() - 1]);
        let options: Vec<usize> = map.neighbors(cur).into_iter().filter(|&n| n != prev).collect();
        match options.choose(rng) {
            Some(&n) => walk.push(n),
            None => break,
        }
    }
    walk
}

/// Task along a node walk: start a quarter of the way down the first edge,
/// one goal at the middle of each later edge (the last at its far node if
/// that is a dead end).
pub fn walk_task(map: &CorridorMap, walk: &[usize], id: &str, time_factor: f64) -> TaskSpec {
    let start = map.edge_pose(walk[0], walk[1], 0.25);
    let mut goals = Vec::new();
    for w in walk.windows(2).skip(1) {
        goals.push(map.edge_pose(w[0], w[1], 0.5));
    }
    let (a, b) = (walk[walk.len() - 2], walk[walk.len() - 1]);
    if map.degree(b) == 1 || goals.is_empty() {
        // stop short of the dead-end wall
        let len = {
            let (pa, pb) = (map.nodes[a], map.nodes[b]);
            (pb[0] - pa[0]).hypot(pb[1] - pa[1])
        };
        goals.push(map.edge_pose(a, b, 1.0 - 0.3 / len));
    }
    let mut dist = 0.0;
    let mut prev = start;
    for g in &goals {
        dist += prev.distance(g) * 1.3;
        prev = *g;
    }
    TaskSpec {
        id: id.to_string(),
        map_id: map.id.clone(),
        scene: String::new(),
        obstacles: Vec::new(),
        start,
        goals,
        time_limit: time_factor * dist / 0.6 + 30.0,
    }
}

/// Random-walk demonstration tasks on a map.
pub fn collection_tasks(map: &CorridorMap, count: usize, walk_edges: usize, seed: u64) -> Vec<TaskSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for k in 0..count {
        let e = map.edges[rng.gen_range(0..map.edges.len())];
        let first = if rng.gen_bool(0.5) { e } else { (e.1, e.0) };
        let walk = random_walk(map, first, walk_edges, &mut rng);
        out.push(walk_task(map, &walk, &format!("{}-walk{k}", map.id), 3.0));
    }
    out
}

/// Demonstration maps and their random-walk tasks: `per_family` variants
/// of each training family, `walks` tasks per map. Family A gets twice the
/// variants so its junction is seen in both turn directions often.
pub fn training_suite(per_family: u64, walks: usize, seed: u64) -> Vec<(CorridorMap, Vec<TaskSpec>)> {
    let mut out = Vec::new();
    for f in Family::TRAINING {
        let n = if f == Family::A { 2 * per_family } else { per_family };
        for v in 0..n {
            let m = generate(f, v);
            let tasks = collection_tasks(&m, walks, 6, seed ^ (v << 8) ^ (f as u64));
            out.push((m, tasks));
        }
    }
    out
}

/// Held-out two-goal task on a family-A map: both legs reach the T-junction
/// from the same stem and must leave it in opposite directions.
pub fn junction_task(map: &CorridorMap) -> TaskSpec {
    use layout_a::*;
    assert_eq!(map.family, Family::A, "junction task needs a family-A map");
    // stem BM -> TM, left to TL, down to BL, round to BM, up the stem again,
    // right to the TR dead end
    let walk = [BM, TM, TL, BL, BM, TM, TR];
    let start = map.edge_pose(BM, TM, 0.2);
    let g1 = map.edge_pose(TL, BL, 0.4);
    let len_tr = {
        let (pa, pb) = (map.nodes[TM], map.nodes[TR]);
        (pb[0] - pa[0]).hypot(pb[1] - pa[1])
    };
    let g2 = map.edge_pose(TM, TR, 1.0 - 0.3 / len_tr);
    let mut t = walk_task(map, &walk, &format!("{}-J", map.id), 3.0);
    t.start = start;
    t.goals = vec![g1, g2];
    t
}

/// Benchmark task of a map: the junction task for family A, otherwise a
/// long walk from a dead end (or node 0) that turns at junctions.
pub fn benchmark_task(map: &CorridorMap, seed: u64) -> TaskSpec {
    if map.family == Family::A {
        return junction_task(map);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leaf = (0..map.nodes.len()).find(|&n| map.degree(n) == 1).unwrap_or(0);
    let first = (leaf, map.neighbors(leaf)[0]);
    // prefer the longest of a few candidate walks
    let mut best: Vec<usize> = Vec::new();
    for _ in 0..16 {
        let w = random_walk(map, first, 8, &mut rng);
        if w.len() > best.len() {
            best = w;
        }
    }
    walk_task(map, &best, &format!("{}-T", map.id), 3.0)
}

/// All benchmark maps and tasks: one map per family, plus the junction
/// task on family A.
pub fn benchmark_suite(seed: u64) -> Vec<(CorridorMap, TaskSpec)> {
    Family::ALL
        .iter()
        .map(|&f| {
            let m = generate(f, 100);
            let t = benchmark_task(&m, seed);
            (m, t)
        })
        .collect()
}
