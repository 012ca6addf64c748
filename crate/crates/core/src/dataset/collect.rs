use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bench::{derive_seed, Navigator, RunConfig, TaskSpec};
use crate::expert::{carrot, dwa_control};
use crate::localization::Localizer;
use crate::world::{render_camera, Control, OccupancyGrid, SimState, Simulator};

use super::{DatasetError, DatasetPool, Sample, SampleMeta};

#[derive(Clone, Debug, PartialEq)]
pub struct CollectConfig {
    /// Leg time budget as a multiple of planned length over top speed.
    pub timeout_factor: f64,
    /// Goal tolerance while collecting (m).
    pub goal_tol: f64,
    /// Consecutive empty dynamic windows before the episode is dropped.
    pub max_empty_window: usize,
    /// Std-dev of Gaussian noise on the executed (not recorded) steering.
    pub exec_noise: f64,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self {
            timeout_factor: 4.0,
            goal_tol: 0.25,
            max_empty_window: 20,
            exec_noise: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EpisodeOutcome {
    Completed,
    Collision,
    Timeout,
    Stuck,
    NoPath,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CollectReport {
    pub episodes: usize,
    pub samples: usize,
    /// Dropped episodes by outcome.
    pub discarded: BTreeMap<String, usize>,
}

/// Drives one task with the expert (dynamic window toward a carrot on the
/// path replanned from the pose estimate) and records `(observation, intentions, command)` every
/// step. Only completed episodes are worth keeping.
pub fn collect_episode(
    grid: &OccupancyGrid,
    task: &TaskSpec,
    cfg: &RunConfig,
    seed: u64,
) -> (Vec<Sample>, EpisodeOutcome) {
    let c = &cfg.collect;
    let sim = Simulator::new(grid, cfg.robot);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, c.exec_noise.max(0.0)).expect("finite noise");
    let mut state = SimState::at_rest(task.start, task.obstacles.clone());
    let mut loc = Localizer::new(&cfg.loc, &task.start, &mut rng);
    let mut nav = Navigator::new(grid, cfg.planner.clone(), cfg.bench.history_spacing);
    let mut samples = Vec::new();
    let mut empty_run = 0;

    for (leg, goal) in task.goals.iter().enumerate() {
        nav.set_goal(*goal, leg + 1 == task.goals.len());
        let leg_start = state.time;
        let mut budget = None;
        loop {
            let est = loc.update(grid, &state.truth, &mut rng);
            nav.record(&est);
            let path = match nav.update(&est) {
                Ok(p) => p.clone(),
                Err(_) => return (samples, EpisodeOutcome::NoPath),
            };
            let budget = *budget.get_or_insert(c.timeout_factor * path.length().max(0.5) / cfg.robot.v_max);
            let obs = match render_camera(grid, &state.obstacles, &state.truth, &cfg.camera) {
                Ok(o) => o.to_bytes(),
                Err(_) => return (samples, EpisodeOutcome::Collision),
            };
            let (dlm, lpe) = nav.intentions(&est, &cfg.intention);
            // the demonstrator acts on the true pose; intentions use the estimate
            let target = carrot(&path, &state.truth, cfg.bench.carrot);
            let label = match dwa_control(
                grid,
                &state.obstacles,
                &state.truth,
                (state.v, state.omega),
                &target,
                &cfg.robot,
                &cfg.dwa,
            ) {
                Ok(u) => {
                    empty_run = 0;
                    u
                }
                Err(e) => {
                    empty_run += 1;
                    if empty_run > c.max_empty_window {
                        return (samples, EpisodeOutcome::Stuck);
                    }
                    e.braking
                }
            };
            samples.push(Sample {
                obs,
                dlm,
                lpe,
                v: label.v as f32,
                steer: label.steer as f32,
                meta: SampleMeta {
                    map_id: task.map_id.clone(),
                    task_id: format!("{}#{leg}", task.id),
                    time: state.time,
                },
            });
            let exec = if c.exec_noise > 0.0 {
                Control::new(label.v, label.steer + noise.sample(&mut rng))
            } else {
                label
            };
            state = sim.step(&state, exec, cfg.dt);
            if state.collided {
                return (samples, EpisodeOutcome::Collision);
            }
            if state.truth.distance(goal) <= c.goal_tol {
                break;
            }
            if state.time - leg_start > budget {
                return (samples, EpisodeOutcome::Timeout);
            }
        }
    }
    (samples, EpisodeOutcome::Completed)
}

/// Collects every task (each with its own derived seed), keeps completed
/// episodes, and applies the seeded 4:1 split.
pub fn collect(
    runs: &[(&OccupancyGrid, &TaskSpec)],
    cfg: &RunConfig,
    seed: u64,
) -> Result<(DatasetPool, CollectReport), DatasetError> {
    let mut pool = DatasetPool::new(cfg.camera.height, cfg.camera.width, cfg.intention.size);
    let mut report = CollectReport::default();
    for (grid, task) in runs {
        let (samples, outcome) = collect_episode(grid, task, cfg, derive_seed(seed, &format!("collect/{}", task.id)));
        report.episodes += 1;
        if outcome == EpisodeOutcome::Completed {
            for s in samples {
                pool.push(s)?;
            }
        } else {
            log::warn!("dropping episode {}: {:?}", task.id, outcome);
            *report.discarded.entry(format!("{outcome:?}")).or_insert(0) += 1;
        }
    }
    report.samples = pool.len();
    pool.split(derive_seed(seed, "split"));
    Ok((pool, report))
}
