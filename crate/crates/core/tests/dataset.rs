use std::collections::BTreeSet;

use intentnav::bench::{collection_tasks, generate, Family, RunConfig, TaskSpec};
use intentnav::dataset::{
    collect, collect_episode, encode_pool, read_pool, sample_epoch, write_pool, DatasetPool, EpisodeOutcome, Sample,
    SampleMeta,
};
use intentnav::intention::{Dlm, LpeIntention};
use intentnav::world::{Cell, DynamicObstacle, OccupancyGrid, Pose2D};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn straight_corridor() -> OccupancyGrid {
    // 10 m x 2 m, free band y in [0.3, 1.7]
    let (w, h) = (100, 20);
    let mut cells = vec![Cell::Occupied; w * h];
    for j in 3..17 {
        for i in 1..99 {
            cells[j * w + i] = Cell::Free;
        }
    }
    OccupancyGrid::new(w, h, 0.1, Pose2D::new(0.0, 0.0, 0.0), cells).unwrap()
}

fn corridor_task() -> TaskSpec {
    TaskSpec {
        id: "straight".into(),
        map_id: "corridor".into(),
        scene: String::new(),
        obstacles: Vec::new(),
        start: Pose2D::new(1.0, 1.0, 0.0),
        goals: vec![Pose2D::new(9.0, 1.0, 0.0)],
        time_limit: 100.0,
    }
}

fn small_cfg() -> RunConfig {
    let mut c = RunConfig::desk();
    c.camera.width = 16;
    c.camera.height = 16;
    c.intention.size = 32;
    c
}

fn small_pool(seed: u64) -> DatasetPool {
    let cfg = small_cfg();
    let a = generate(Family::A, 0);
    let b = generate(Family::B, 0);
    let ta = collection_tasks(&a, 2, 4, 1);
    let tb = collection_tasks(&b, 1, 4, 2);
    let runs: Vec<(&OccupancyGrid, &TaskSpec)> = ta
        .iter()
        .map(|t| (&a.grid, t))
        .chain(tb.iter().map(|t| (&b.grid, t)))
        .collect();
    collect(&runs, &cfg, seed).unwrap().0
}

#[test]
fn straight_corridor_episode_length_and_labels() {
    let g = straight_corridor();
    let mut cfg = small_cfg();
    // exact localization: the replanned path is the straight line itself
    cfg.loc.noisy_sigma_xy = 0.0;
    cfg.loc.noisy_sigma_theta = 0.0;
    let (samples, outcome) = collect_episode(&g, &corridor_task(), &cfg, 1);
    assert_eq!(outcome, EpisodeOutcome::Completed);
    // 7.75 m at 0.6 m/s is 129 steps; the accel ramp adds a few
    assert!((134..=160).contains(&samples.len()), "{} steps", samples.len());
    for s in &samples {
        assert!(
            matches!(s.dlm, Dlm::GoForward | Dlm::Stop),
            "{:?} at t={}",
            s.dlm,
            s.meta.time
        );
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let a = encode_pool(&small_pool(4));
    let b = encode_pool(&small_pool(4));
    assert!(a == b, "encoded pools differ");
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.bin");
    let pool = small_pool(4);
    write_pool(&pool, &p).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), a);
    let back = read_pool(&p).unwrap();
    assert_eq!(back, pool);
}

fn ten_sample_pool() -> DatasetPool {
    let mut pool = DatasetPool::new(2, 2, 2);
    for k in 0..10 {
        pool.push(Sample {
            obs: vec![k as u8; 12],
            dlm: Dlm::GoForward,
            lpe: LpeIntention::from_indices(2, vec![0; 4]).unwrap(),
            v: 0.0,
            steer: 0.0,
            meta: SampleMeta {
                map_id: "m".into(),
                task_id: "t".into(),
                time: k as f64,
            },
        })
        .unwrap();
    }
    pool
}

#[test]
fn epoch_draws_are_uniform() {
    let pool = ten_sample_pool();
    let draws = 100_000;
    let mut counts = [0usize; 10];
    for s in sample_epoch(&pool, draws, 11).unwrap() {
        counts[s.meta.time as usize] += 1;
    }
    // binomial(1e5, 0.1): mean 1e4, sd 94.87
    let sd = (draws as f64 * 0.1 * 0.9).sqrt();
    for (k, &c) in counts.iter().enumerate() {
        assert!((c as f64 - 1e4).abs() < 5.0 * sd, "sample {k}: {c}");
    }
}

#[test]
fn eval_samples_are_never_drawn() {
    let pool = small_pool(9);
    let train: BTreeSet<usize> = pool.train_indices().into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in pool.draw_indices(20_000, &mut rng).unwrap() {
        assert!(train.contains(&i), "drew eval sample {i}");
    }
}

#[test]
fn partitions_are_disjoint_and_maps_isolated() {
    let pool = small_pool(2);
    let tr = pool.train_indices();
    let ev = pool.eval_indices();
    assert_eq!(tr.len() + ev.len(), pool.len());
    assert!(tr.iter().all(|i| !ev.contains(i)));
    assert!(((ev.len() as f64) - pool.len() as f64 / 5.0).abs() <= 0.5);
    let maps: BTreeSet<&str> = pool.samples().iter().map(|s| s.meta.map_id.as_str()).collect();
    assert_eq!(maps, BTreeSet::from(["A0", "B0"]));
}

#[test]
fn straight_segment_steering_is_small() {
    let pool = small_pool(3);
    let straight: Vec<f64> = pool
        .samples()
        .iter()
        .filter(|s| s.dlm == Dlm::GoForward)
        .map(|s| s.steer.abs() as f64)
        .collect();
    assert!(straight.len() > 100);
    let mean = straight.iter().sum::<f64>() / straight.len() as f64;
    assert!(mean < 0.2, "mean |steer| {mean}");
}

#[test]
fn collision_episodes_are_discarded_and_counted() {
    let g = straight_corridor();
    let mut hit = corridor_task();
    hit.id = "headon".into();
    // fills the corridor and drives at the robot faster than it can back off
    hit.obstacles = vec![DynamicObstacle::new(0.6, 1.0, vec![[8.5, 1.0], [0.5, 1.0]]).unwrap()];
    let clean = corridor_task();
    let cfg = small_cfg();
    let (pool, report) = collect(&[(&g, &hit), (&g, &clean)], &cfg, 1).unwrap();
    assert_eq!(report.episodes, 2);
    assert_eq!(report.discarded.get("Collision"), Some(&1));
    assert!(pool.samples().iter().all(|s| s.meta.task_id.starts_with("straight")));
    assert_eq!(report.samples, pool.len());
}
