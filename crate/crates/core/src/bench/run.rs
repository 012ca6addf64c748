use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expert::{carrot, dwa_control, pure_pursuit};
use crate::localization::Localizer;
use crate::neuralnet::{images_to_tensor, lpe_to_tensor, IntentBatch, IntentionNet, NetKind};
use crate::planner::{project_on_path, PlannedPath, Planner};
use crate::world::{render_camera, OccupancyGrid, Pose2D, SimState, Simulator};

use super::config::{derive_seed, RunConfig};
use super::metrics::{mean_jerk, RunMetrics};
use super::nav::Navigator;
use super::task::TaskSpec;
use super::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    DlmNet,
    LpeNet,
    PathTracker,
    DynamicWindow,
    NonIntention,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::DlmNet,
        Method::LpeNet,
        Method::PathTracker,
        Method::DynamicWindow,
        Method::NonIntention,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::DlmNet => "dlm",
            Method::LpeNet => "lpe",
            Method::PathTracker => "tracker",
            Method::DynamicWindow => "dwa",
            Method::NonIntention => "nointent",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::DlmNet => "DLM-Net",
            Method::LpeNet => "LPE-Net",
            Method::PathTracker => "PathTracker",
            Method::DynamicWindow => "Dynamic Window",
            Method::NonIntention => "No-Intention",
        }
    }

    /// Net kind the method needs, if any.
    pub fn net_kind(self) -> Option<NetKind> {
        match self {
            Method::DlmNet => Some(NetKind::Dlm),
            Method::LpeNet => Some(NetKind::Lpe),
            Method::NonIntention => Some(NetKind::NonIntention),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, BenchError> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub truth: Pose2D,
    pub est: Pose2D,
    pub v: f64,
    pub omega: f64,
    pub goal: usize,
    /// True on the first sample after a manual reset.
    pub reset: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub samples: Vec<TraceSample>,
    /// Time and pose of every manual reset.
    pub resets: Vec<(f64, Pose2D)>,
}

impl Trace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,y,theta,v,omega,est_x,est_y,est_theta,goal,reset\n");
        for k in &self.samples {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                k.t,
                k.truth.x,
                k.truth.y,
                k.truth.theta,
                k.v,
                k.omega,
                k.est.x,
                k.est.y,
                k.est.theta,
                k.goal,
                k.reset as u8
            );
        }
        s
    }

    /// World-frame velocity vectors split at manual resets.
    pub fn velocity_segments(&self) -> Vec<Vec<[f64; 2]>> {
        let mut out: Vec<Vec<[f64; 2]>> = Vec::new();
        for s in &self.samples {
            if s.reset || out.is_empty() {
                out.push(Vec::new());
            }
            let (sn, cs) = s.truth.theta.sin_cos();
            out.last_mut().unwrap().push([s.v * cs, s.v * sn]);
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub metrics: RunMetrics,
    pub trace: Trace,
}

fn plan_reference(planner: &mut Planner, from: &Pose2D, goal: &Pose2D) -> Result<PlannedPath, BenchError> {
    planner
        .plan(from, goal)
        .map_err(|e| BenchError::Task(format!("no reference path: {e}")))
}

/// Nearest collision-free pose on `path`: the closest path pose to `truth`,
/// moved forward along the path (then backward) in 0.1 m steps until clear.
fn reset_pose(sim: &Simulator, state: &SimState, path: &PlannedPath) -> Pose2D {
    let s0 = project_on_path(path, &state.truth);
    let free = |s: f64| {
        let p = path.pose_at(s);
        (!sim.pose_collides(&p, &state.obstacles)).then_some(p)
    };
    let total = path.length();
    let mut k = 0.0;
    while s0 + k <= total + 1e-9 {
        if let Some(p) = free(s0 + k) {
            return p;
        }
        k += 0.1;
    }
    let mut k = 0.1;
    while s0 - k >= -1e-9 {
        if let Some(p) = free(s0 - k) {
            return p;
        }
        k += 0.1;
    }
    path.pose_at(s0)
}

/// Runs one method on one task in closed loop.
pub fn run_task(
    grid: &OccupancyGrid,
    task: &TaskSpec,
    method: Method,
    net: Option<&IntentionNet<f32>>,
    cfg: &RunConfig,
    seed: u64,
) -> Result<RunOutcome, BenchError> {
    if let Some(kind) = method.net_kind() {
        match net {
            Some(n) if n.kind == kind => {}
            _ => {
                return Err(BenchError::Config(format!(
                    "{} needs a {} net",
                    method.label(),
                    kind.name()
                )))
            }
        }
    }
    let b = &cfg.bench;
    let sim = Simulator::new(grid, cfg.robot);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("run/{}/{}", task.id, method.name())));
    let mut state = SimState::at_rest(task.start, task.obstacles.clone());
    let mut loc = Localizer::new(&cfg.loc, &task.start, &mut rng);
    let mut nav = Navigator::new(grid, cfg.planner.clone(), b.history_spacing);
    let mut ref_planner = Planner::new(grid, cfg.planner.clone());

    let mut goal_idx = 0;
    nav.set_goal(task.goals[0], task.goals.len() == 1);
    // last usable plan; seeded with a plan from the true start so an
    // unreachable goal is reported before the robot moves
    let mut fallback = plan_reference(&mut ref_planner, &task.start, &task.goals[0])?;
    let mut anchor = (0.0, task.start);
    let mut interventions = 0;
    let mut distance = 0.0;
    let mut trace = Trace::default();
    let mut reset_flag = false;
    let mut failure: Option<String> = None;

    loop {
        if state.time >= task.time_limit {
            failure = Some("time limit".into());
            break;
        }
        let est = loc.update(grid, &state.truth, &mut rng);
        nav.record(&est);
        let path = match nav.update(&est) {
            Ok(p) => p.clone(),
            Err(_) => fallback.clone(),
        };
        fallback = path.clone();

        let control = match method {
            Method::PathTracker => pure_pursuit(&path, &est, b.pursuit_lookahead, &cfg.robot).control,
            Method::DynamicWindow => {
                let target = carrot(&path, &est, b.carrot);
                dwa_control(
                    grid,
                    &state.obstacles,
                    &est,
                    (state.v, state.omega),
                    &target,
                    &cfg.robot,
                    &cfg.dwa,
                )
                .unwrap_or_else(|e| e.braking)
            }
            _ => {
                let net = net.unwrap();
                let obs = render_camera(grid, &state.obstacles, &state.truth, &cfg.camera)
                    .map_err(|e| BenchError::Task(e.to_string()))?
                    .to_bytes();
                let x = images_to_tensor::<f32>(&[&obs], cfg.camera.height, cfg.camera.width);
                let (d, l) = nav.intentions(&est, &cfg.intention);
                let out = match method {
                    Method::DlmNet => net.predict(&x, &IntentBatch::Dlm(&[d])),
                    Method::LpeNet => {
                        let t = lpe_to_tensor::<f32>(&[&l.indices], l.size);
                        net.predict(&x, &IntentBatch::Lpe(&t))
                    }
                    _ => net.predict(&x, &IntentBatch::None),
                };
                out.map_err(|e| BenchError::Task(e.to_string()))?
            }
        };

        let prev = state.truth;
        state = sim.step(&state, control, cfg.dt);
        distance += prev.distance(&state.truth);
        trace.samples.push(TraceSample {
            t: state.time,
            truth: state.truth,
            est,
            v: state.v,
            omega: state.omega,
            goal: goal_idx,
            reset: reset_flag,
        });
        reset_flag = false;

        if state.truth.distance(&task.goals[goal_idx]) <= b.goal_radius {
            goal_idx += 1;
            if goal_idx == task.goals.len() {
                break;
            }
            nav.set_goal(task.goals[goal_idx], goal_idx + 1 == task.goals.len());
            if let Ok(p) = ref_planner.plan(&state.truth, &task.goals[goal_idx]) {
                fallback = p;
            }
            anchor = (state.time, state.truth);
            continue;
        }

        if state.truth.distance(&anchor.1) >= b.stall_dist {
            anchor = (state.time, state.truth);
        }
        let stalled = state.time - anchor.0 >= b.stall_window - 1e-9;
        if state.collided || stalled {
            interventions += 1;
            log::debug!(
                "{} {}: intervention {} at t={:.1} (collided={} stalled={})",
                task.id,
                method.name(),
                interventions,
                state.time,
                state.collided,
                stalled
            );
            if interventions > b.max_interventions {
                failure = Some("too many interventions".into());
                break;
            }
            let p = reset_pose(&sim, &state, &path);
            state.truth = p;
            state.v = 0.0;
            state.omega = 0.0;
            state.collided = false;
            loc.reset(&p, &mut rng);
            nav.clear_history();
            anchor = (state.time, p);
            trace.resets.push((state.time, p));
            reset_flag = true;
        }
    }

    let smoothness = mean_jerk(&trace.velocity_segments(), cfg.dt).ok();
    let metrics = RunMetrics {
        task_id: task.id.clone(),
        map_id: task.map_id.clone(),
        method,
        success: failure.is_none(),
        failure,
        interventions,
        goals_reached: goal_idx,
        time: state.time,
        distance,
        smoothness,
        plan_fallbacks: nav.fallbacks,
    };
    Ok(RunOutcome { metrics, trace })
}
