//! Independent oracles shared by the module tests and the acceptance run.

use intentnav::expert::{dwa_control, window_samples, DwaConfig};
use intentnav::planner::{nearest_on_path, signed_curvature, PlannedPath};
use intentnav::world::{integrate, wrap_angle, Cell, Control, DynamicObstacle, OccupancyGrid, Pose2D, RobotParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_scene(rng: &mut ChaCha8Rng, n: usize) -> OccupancyGrid {
    let mut cells = vec![Cell::Free; n * n];
    for _ in 0..rng.gen_range(3..12) {
        let (i0, j0) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let (w, h) = (rng.gen_range(1..10), rng.gen_range(1..10));
        for j in j0..(j0 + h).min(n) {
            for i in i0..(i0 + w).min(n) {
                cells[j * n + i] = Cell::Occupied;
            }
        }
    }
    OccupancyGrid::new(n, n, 0.1, Pose2D::new(0.0, 0.0, 0.0), cells).unwrap()
}

pub fn free_pose(g: &OccupancyGrid, rng: &mut ChaCha8Rng, min_clear: f64) -> Pose2D {
    let ext = g.width() as f64 * g.resolution();
    loop {
        let p = Pose2D::new(
            rng.gen_range(0.3..ext - 0.3),
            rng.gen_range(0.3..ext - 0.3),
            rng.gen_range(-3.1..3.1),
        );
        if !g.disc_collides(p.xy(), min_clear) {
            return p;
        }
    }
}

/// Straightforward re-evaluation of the DWA objective over the whole window,
/// returning the set of maximizers' `(v, omega)` after tie-breaking.
pub fn dwa_oracle(
    g: &OccupancyGrid,
    obstacles: &[DynamicObstacle],
    pose: &Pose2D,
    vel: (f64, f64),
    target: &Pose2D,
    robot: &RobotParams,
    cfg: &DwaConfig,
) -> Option<(f64, f64)> {
    let (vs, ws) = window_samples(vel.0, vel.1, robot, cfg);
    let r = robot.radius + cfg.safety_margin;
    let steps = (cfg.horizon / cfg.dt_sim).round() as usize;
    let mut all = Vec::new();
    for &v in &vs {
        for &w in &ws {
            let mut states = Vec::new();
            let mut p = *pose;
            for _ in 0..steps {
                p = integrate(&p, v, w, cfg.dt_sim);
                states.push(p);
            }
            let collides = |q: &Pose2D| {
                g.disc_collides(q.xy(), r)
                    || obstacles
                        .iter()
                        .any(|o| (o.center.x - q.x).hypot(o.center.y - q.y) < o.radius + r)
            };
            let first_hit = states.iter().position(collides);
            if let Some(k) = first_hit {
                let d = v * cfg.dt_sim * k as f64;
                if v > (2.0 * robot.accel_v * d).sqrt() {
                    continue;
                }
            }
            let end = match first_hit {
                Some(k) => states[k],
                None => *states.last().unwrap(),
            };
            let clear = if first_hit.is_some() {
                0.0
            } else {
                states
                    .iter()
                    .map(|q| {
                        let mut c = g.clearance(q.xy()) - r;
                        for o in obstacles {
                            c = c.min((o.center.x - q.x).hypot(o.center.y - q.y) - o.radius - r);
                        }
                        c.max(0.0)
                    })
                    .fold(f64::INFINITY, f64::min)
            };
            let (dx, dy) = (target.x - end.x, target.y - end.y);
            let bearing = if dx.hypot(dy) > 1e-6 {
                dy.atan2(dx)
            } else {
                target.theta
            };
            let heading = 1.0 - wrap_angle(bearing - end.theta).abs() / std::f64::consts::PI;
            let score = cfg.alpha_heading * heading
                + cfg.beta_clearance * clear.min(cfg.clearance_cap) / cfg.clearance_cap
                + cfg.gamma_velocity * v / robot.v_max;
            all.push((score, v, w));
        }
    }
    let best = all.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
    let mut tied: Vec<(f64, f64)> = all.iter().filter(|a| a.0 >= best - 1e-12).map(|a| (a.1, a.2)).collect();
    tied.sort_by(|a, b| {
        a.1.abs()
            .total_cmp(&b.1.abs())
            .then(a.0.total_cmp(&b.0))
            .then(b.1.total_cmp(&a.1))
    });
    tied.first().copied()
}

/// Runs `queries` random DWA queries against the exhaustive oracle; panics on
/// the first disagreement. Returns how many queries had an admissible pair.
pub fn dwa_oracle_agreement(queries: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let robot = RobotParams::default();
    let cfg = DwaConfig::default();
    let mut empties = 0;
    for q in 0..queries {
        let g = random_scene(&mut rng, 50);
        let pose = free_pose(&g, &mut rng, robot.radius + 0.01);
        let obstacles: Vec<DynamicObstacle> = (0..rng.gen_range(0..3))
            .map(|_| {
                let c = free_pose(&g, &mut rng, 0.0);
                DynamicObstacle::new(rng.gen_range(0.1..0.4), 0.0, vec![[c.x, c.y]]).unwrap()
            })
            .filter(|o| !o.overlaps_disc(pose.xy(), robot.radius))
            .collect();
        let vel = (
            rng.gen_range(0.0..robot.v_max),
            rng.gen_range(-robot.omega_max..robot.omega_max),
        );
        let target = free_pose(&g, &mut rng, 0.0);
        let got = dwa_control(&g, &obstacles, &pose, vel, &target, &robot, &cfg);
        let want = dwa_oracle(&g, &obstacles, &pose, vel, &target, &robot, &cfg);
        match (got, want) {
            (Ok(c), Some((v, w))) => {
                assert_eq!(c, Control::from_physical(v, w, &robot), "query {q}");
            }
            (Err(_), None) => empties += 1,
            (a, b) => panic!("query {q}: {a:?} vs {b:?}"),
        }
    }
    assert!(empties < queries);
    queries - empties
}

pub fn circle(r: f64, ccw: bool, n: usize) -> PlannedPath {
    let sign = if ccw { 1.0 } else { -1.0 };
    PlannedPath::from_poses((0..=n).map(|k| {
        let a = k as f64 * 0.01 / r;
        Pose2D::new(r * a.sin(), sign * r * (1.0 - a.cos()), sign * a)
    }))
}

/// Worst |kappa - (+-1/r)| over radii {0.5, 1, 2, 4}, both directions.
pub fn circle_curvature_error() -> f64 {
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, 2.0, 4.0] {
        for ccw in [true, false] {
            let p = circle(r, ccw, 300);
            let expect = if ccw { 1.0 / r } else { -1.0 / r };
            for s in [0.0, 0.7, 1.3, p.length()] {
                let k = signed_curvature(&p, s, 0.4);
                worst = worst.max((k - expect).abs());
            }
        }
    }
    worst
}

/// `queries` random points: nearest_on_path against a brute-force scan.
pub fn nearest_agreement(queries: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let path = PlannedPath::from_poses((0..200).map(|k| {
        let t = k as f64 * 0.1;
        Pose2D::new(t, (t * 0.7).sin() * 2.0, 0.0)
    }));
    for _ in 0..queries {
        let q = Pose2D::new(rng.gen_range(-2.0..22.0), rng.gen_range(-4.0..4.0), 0.0);
        let mut best = (f64::INFINITY, 0.0);
        for (p, &s) in path.poses().iter().zip(path.arclen()) {
            let d = (p.x - q.x).hypot(p.y - q.y);
            if d < best.0 {
                best = (d, s);
            }
        }
        assert_eq!(nearest_on_path(&path, &q), best.1);
    }
}

/// Random rectangle-cluttered room, `n`×`n` cells at 0.1 m, origin 0, with
/// a one-cell wall border.
pub fn random_room(rng: &mut ChaCha8Rng, n: usize) -> OccupancyGrid {
    let mut cells = vec![Cell::Free; n * n];
    let area = (n * n) as f64 / 10_000.0;
    let blocks = (rng.gen_range(4.0..10.0) * area).ceil() as usize;
    for _ in 0..blocks {
        let (i0, j0) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let (w, h) = (rng.gen_range(2..14), rng.gen_range(2..14));
        for j in j0..(j0 + h).min(n) {
            for i in i0..(i0 + w).min(n) {
                cells[j * n + i] = Cell::Occupied;
            }
        }
    }
    for k in 0..n {
        cells[k] = Cell::Occupied;
        cells[(n - 1) * n + k] = Cell::Occupied;
        cells[k * n] = Cell::Occupied;
        cells[k * n + n - 1] = Cell::Occupied;
    }
    OccupancyGrid::new(n, n, 0.1, Pose2D::new(0.0, 0.0, 0.0), cells).unwrap()
}

/// Brute-force disc test against every blocked cell square near `p`;
/// the grid origin must be 0.
pub fn disc_free(g: &OccupancyGrid, p: [f64; 2], r: f64) -> bool {
    let res = g.resolution();
    let (w, h) = (g.width() as i64, g.height() as i64);
    let reach = (r / res).ceil() as i64 + 1;
    let (ci, cj) = ((p[0] / res).floor() as i64, (p[1] / res).floor() as i64);
    for j in cj - reach..=cj + reach {
        for i in ci - reach..=ci + reach {
            let blocked = i < 0 || j < 0 || i >= w || j >= h || g.cell(i as usize, j as usize).is_blocked();
            if !blocked {
                continue;
            }
            let (x0, y0) = (i as f64 * res, j as f64 * res);
            let dx = (x0 - p[0]).max(0.0).max(p[0] - x0 - res);
            let dy = (y0 - p[1]).max(0.0).max(p[1] - y0 - res);
            if dx.hypot(dy) < r {
                return false;
            }
        }
    }
    true
}

/// 8-connected Dijkstra over cell centers whose disc of radius `r` is free.
/// Returns the length and the cell sequence from `a` to `b`.
pub fn dijkstra(g: &OccupancyGrid, r: f64, a: (usize, usize), b: (usize, usize)) -> Option<(f64, Vec<(usize, usize)>)> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let (w, h) = (g.width(), g.height());
    let res = g.resolution();
    let center = |i: usize, j: usize| [(i as f64 + 0.5) * res, (j as f64 + 0.5) * res];
    let ok: Vec<bool> = (0..w * h).map(|k| disc_free(g, center(k % w, k / w), r)).collect();
    if !ok[a.1 * w + a.0] || !ok[b.1 * w + b.0] {
        return None;
    }
    let mut dist = vec![f64::INFINITY; w * h];
    let mut prev = vec![usize::MAX; w * h];
    let mut heap = BinaryHeap::new();
    let start = a.1 * w + a.0;
    dist[start] = 0.0;
    // distances in integer nanometers keep the heap ordering total
    heap.push(Reverse((0u64, start)));
    while let Some(Reverse((_, k))) = heap.pop() {
        if k == b.1 * w + b.0 {
            break;
        }
        let (i, j) = ((k % w) as i64, (k / w) as i64);
        for (di, dj) in [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)] {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni >= w as i64 || nj >= h as i64 {
                continue;
            }
            let nk = nj as usize * w + ni as usize;
            if !ok[nk] {
                continue;
            }
            let nd = dist[k] + res * ((di * di + dj * dj) as f64).sqrt();
            if nd < dist[nk] - 1e-12 {
                dist[nk] = nd;
                prev[nk] = k;
                heap.push(Reverse(((nd * 1e9) as u64, nk)));
            }
        }
    }
    let goal = b.1 * w + b.0;
    if !dist[goal].is_finite() {
        return None;
    }
    let mut cells = vec![(b.0, b.1)];
    let mut k = goal;
    while k != start {
        k = prev[k];
        cells.push((k % w, k / w));
    }
    cells.reverse();
    Some((dist[goal], cells))
}

/// A solvable planning instance: endpoints at least `min_len` apart along
/// the free-space Dijkstra path, headed along that path at both ends.
pub struct Instance {
    pub grid: OccupancyGrid,
    pub start: Pose2D,
    pub goal: Pose2D,
    pub bound: f64,
}

pub fn random_instance(rng: &mut ChaCha8Rng, r: f64, min_len: f64) -> Instance {
    loop {
        let n = rng.gen_range(60..=200);
        let g = random_room(rng, n);
        let pick = |rng: &mut ChaCha8Rng| loop {
            let (i, j) = (rng.gen_range(1..n - 1), rng.gen_range(1..n - 1));
            let c = [(i as f64 + 0.5) * 0.1, (j as f64 + 0.5) * 0.1];
            if disc_free(&g, c, r + 0.2) {
                return (i, j);
            }
        };
        let (a, b) = (pick(rng), pick(rng));
        let Some((len, cells)) = dijkstra(&g, r + 0.2, a, b) else {
            continue;
        };
        if len < min_len {
            continue;
        }
        let pt = |c: (usize, usize)| [(c.0 as f64 + 0.5) * 0.1, (c.1 as f64 + 0.5) * 0.1];
        let k = cells.len().min(8);
        let (s0, s1) = (pt(cells[0]), pt(cells[k - 1]));
        let (g0, g1) = (pt(cells[cells.len() - k]), pt(cells[cells.len() - 1]));
        let bound = dijkstra(&g, r, a, b).expect("a wider corridor exists").0;
        return Instance {
            start: Pose2D::new(s0[0], s0[1], (s1[1] - s0[1]).atan2(s1[0] - s0[0])),
            goal: Pose2D::new(g1[0], g1[1], (g1[1] - g0[1]).atan2(g1[0] - g0[0])),
            grid: g,
            bound,
        };
    }
}
