use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dataset::CollectConfig;
use crate::expert::DwaConfig;
use crate::intention::IntentionConfig;
use crate::localization::{LocConfig, LocMode};
use crate::neuralnet::{NetConfig, TrainConfig};
use crate::planner::PlannerConfig;
use crate::world::{CameraConfig, RobotParams};

use super::BenchError;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    /// A goal counts as visited within this distance (m).
    pub goal_radius: f64,
    pub max_interventions: usize,
    /// No-progress detection window (s) and minimum displacement (m).
    pub stall_window: f64,
    pub stall_dist: f64,
    pub pursuit_lookahead: f64,
    /// Distance of the expert's target ahead on the path (m).
    pub carrot: f64,
    /// Minimum spacing of traversed-path history points (m).
    pub history_spacing: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            goal_radius: 0.4,
            max_interventions: 25,
            stall_window: 5.0,
            stall_dist: 0.1,
            pursuit_lookahead: 0.8,
            carrot: 1.0,
            history_spacing: 0.1,
        }
    }
}

/// Every tunable of a run, readable from a flat `key = value` file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dt: f64,
    pub robot: RobotParams,
    pub camera: CameraConfig,
    pub loc: LocConfig,
    pub planner: PlannerConfig,
    pub intention: IntentionConfig,
    pub dwa: DwaConfig,
    pub net: NetConfig,
    pub train: TrainConfig,
    pub collect: CollectConfig,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let robot = RobotParams::default();
        Self {
            dt: 0.1,
            robot,
            camera: CameraConfig::default(),
            loc: LocConfig::default(),
            planner: PlannerConfig {
                robot_radius: robot.radius,
                ..PlannerConfig::with_kappa_max(robot.kappa_max())
            },
            intention: IntentionConfig::default(),
            dwa: DwaConfig::default(),
            net: NetConfig::default(),
            train: TrainConfig::default(),
            collect: CollectConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn ulist(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Desk-scale settings used for the learned-controller experiments:
    /// 64x64 camera, 96x96 LPE rasters and 20 training epochs.
    pub fn desk() -> Self {
        let mut c = Self::default();
        c.camera.width = 64;
        c.camera.height = 64;
        c.intention.size = 96;
        c.intention.stroke = 3.0;
        c.train.epochs = 20;
        c.train.eval_max = 1000;
        c
    }

    pub fn entries(&self) -> Vec<(String, String)> {
        let r = &self.robot;
        let c = &self.camera;
        let l = &self.loc;
        let p = &self.planner;
        let i = &self.intention;
        let d = &self.dwa;
        let n = &self.net;
        let t = &self.train;
        let k = &self.collect;
        let b = &self.bench;
        let mode = match l.mode {
            LocMode::NoisyTruth => "noisy",
            LocMode::Mcl => "mcl",
        };
        let kv: Vec<(&str, String)> = vec![
            ("world.dt", self.dt.to_string()),
            ("robot.radius", r.radius.to_string()),
            ("robot.v_max", r.v_max.to_string()),
            ("robot.omega_max", r.omega_max.to_string()),
            ("robot.accel_v", r.accel_v.to_string()),
            ("robot.accel_omega", r.accel_omega.to_string()),
            ("camera.width", c.width.to_string()),
            ("camera.height", c.height.to_string()),
            ("camera.fov", c.fov.to_string()),
            ("camera.max_range", c.max_range.to_string()),
            ("camera.wall_scale", c.wall_scale.to_string()),
            ("loc.mode", mode.to_string()),
            ("loc.particles", l.particles.to_string()),
            ("loc.sigma_z", l.sigma_z.to_string()),
            ("loc.beams", l.beams.to_string()),
            ("loc.max_range", l.max_range.to_string()),
            ("loc.scan_noise", l.scan_noise.to_string()),
            ("loc.motion_sigma_xy", l.motion.sigma_xy.to_string()),
            ("loc.motion_sigma_theta", l.motion.sigma_theta.to_string()),
            ("loc.init_sigma_xy", l.init_sigma_xy.to_string()),
            ("loc.init_sigma_theta", l.init_sigma_theta.to_string()),
            ("loc.noisy_sigma_xy", l.noisy_sigma_xy.to_string()),
            ("loc.noisy_sigma_theta", l.noisy_sigma_theta.to_string()),
            ("planner.xy_resolution", p.xy_resolution.to_string()),
            ("planner.theta_bins", p.theta_bins.to_string()),
            ("planner.step", p.step.to_string()),
            ("planner.steering_set", list(&p.steering_set)),
            ("planner.turn_penalty", p.turn_penalty.to_string()),
            ("planner.goal_tol_xy", p.goal_tol_xy.to_string()),
            ("planner.goal_tol_theta", p.goal_tol_theta.to_string()),
            ("planner.max_expansions", p.max_expansions.to_string()),
            ("planner.robot_radius", p.robot_radius.to_string()),
            ("planner.clearance_weight", p.clearance_weight.to_string()),
            ("planner.comfort_clearance", p.comfort_clearance.to_string()),
            ("intention.curvature_threshold", i.curvature_threshold.to_string()),
            ("intention.curvature_delta", i.curvature_delta.to_string()),
            ("intention.stop_distance", i.stop_distance.to_string()),
            ("intention.window", i.window.to_string()),
            ("intention.back_len", i.back_len.to_string()),
            ("intention.fwd_len", i.fwd_len.to_string()),
            ("intention.stroke", i.stroke.to_string()),
            ("intention.size", i.size.to_string()),
            ("intention.marker_radius", i.marker_radius.to_string()),
            ("dwa.v_samples", d.v_samples.to_string()),
            ("dwa.w_samples", d.w_samples.to_string()),
            ("dwa.horizon", d.horizon.to_string()),
            ("dwa.dt_sim", d.dt_sim.to_string()),
            ("dwa.dt_window", d.dt_window.to_string()),
            ("dwa.alpha_heading", d.alpha_heading.to_string()),
            ("dwa.beta_clearance", d.beta_clearance.to_string()),
            ("dwa.gamma_velocity", d.gamma_velocity.to_string()),
            ("dwa.safety_margin", d.safety_margin.to_string()),
            ("dwa.clearance_cap", d.clearance_cap.to_string()),
            ("net.channels", ulist(&n.channels)),
            ("net.kernels", ulist(&n.kernels)),
            ("net.feature_dim", n.feature_dim.to_string()),
            ("net.embed_dim", n.embed_dim.to_string()),
            ("net.feature_relu", n.feature_relu.to_string()),
            ("train.lr0", t.lr0.to_string()),
            ("train.l2", t.l2.to_string()),
            ("train.batch", t.batch.to_string()),
            ("train.epoch_samples", t.epoch_samples.to_string()),
            ("train.epochs", t.epochs.to_string()),
            ("train.rho", t.rho.to_string()),
            ("train.eps", t.eps.to_string()),
            ("train.eval_max", t.eval_max.to_string()),
            ("collect.timeout_factor", k.timeout_factor.to_string()),
            ("collect.goal_tol", k.goal_tol.to_string()),
            ("collect.max_empty_window", k.max_empty_window.to_string()),
            ("collect.exec_noise", k.exec_noise.to_string()),
            ("bench.goal_radius", b.goal_radius.to_string()),
            ("bench.max_interventions", b.max_interventions.to_string()),
            ("bench.stall_window", b.stall_window.to_string()),
            ("bench.stall_dist", b.stall_dist.to_string()),
            ("bench.pursuit_lookahead", b.pursuit_lookahead.to_string()),
            ("bench.carrot", b.carrot.to_string()),
            ("bench.history_spacing", b.history_spacing.to_string()),
        ];
        kv.into_iter().map(|(a, b)| (a.to_string(), b)).collect()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), BenchError> {
        let bad = || BenchError::Config(format!("bad value `{value}` for `{key}`"));
        let f = || value.parse::<f64>().map_err(|_| bad());
        let u = || value.parse::<usize>().map_err(|_| bad());
        let b = || value.parse::<bool>().map_err(|_| bad());
        let fl = || -> Result<Vec<f64>, BenchError> {
            value
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
                .collect()
        };
        let ul = || -> Result<Vec<usize>, BenchError> {
            value
                .split(',')
                .map(|s| s.trim().parse::<usize>().map_err(|_| bad()))
                .collect()
        };
        match key {
            "world.dt" => self.dt = f()?,
            "robot.radius" => self.robot.radius = f()?,
            "robot.v_max" => self.robot.v_max = f()?,
            "robot.omega_max" => self.robot.omega_max = f()?,
            "robot.accel_v" => self.robot.accel_v = f()?,
            "robot.accel_omega" => self.robot.accel_omega = f()?,
            "camera.width" => self.camera.width = u()?,
            "camera.height" => self.camera.height = u()?,
            "camera.fov" => self.camera.fov = f()?,
            "camera.max_range" => self.camera.max_range = f()?,
            "camera.wall_scale" => self.camera.wall_scale = f()?,
            "loc.mode" => {
                self.loc.mode = match value {
                    "noisy" => LocMode::NoisyTruth,
                    "mcl" => LocMode::Mcl,
                    _ => return Err(bad()),
                }
            }
            "loc.particles" => self.loc.particles = u()?,
            "loc.sigma_z" => self.loc.sigma_z = f()?,
            "loc.beams" => self.loc.beams = u()?,
            "loc.max_range" => self.loc.max_range = f()?,
            "loc.scan_noise" => self.loc.scan_noise = f()?,
            "loc.motion_sigma_xy" => self.loc.motion.sigma_xy = f()?,
            "loc.motion_sigma_theta" => self.loc.motion.sigma_theta = f()?,
            "loc.init_sigma_xy" => self.loc.init_sigma_xy = f()?,
            "loc.init_sigma_theta" => self.loc.init_sigma_theta = f()?,
            "loc.noisy_sigma_xy" => self.loc.noisy_sigma_xy = f()?,
            "loc.noisy_sigma_theta" => self.loc.noisy_sigma_theta = f()?,
            "planner.xy_resolution" => self.planner.xy_resolution = f()?,
            "planner.theta_bins" => self.planner.theta_bins = u()?,
            "planner.step" => self.planner.step = f()?,
            "planner.steering_set" => self.planner.steering_set = fl()?,
            "planner.turn_penalty" => self.planner.turn_penalty = f()?,
            "planner.goal_tol_xy" => self.planner.goal_tol_xy = f()?,
            "planner.goal_tol_theta" => self.planner.goal_tol_theta = f()?,
            "planner.max_expansions" => self.planner.max_expansions = u()?,
            "planner.robot_radius" => self.planner.robot_radius = f()?,
            "planner.clearance_weight" => self.planner.clearance_weight = f()?,
            "planner.comfort_clearance" => self.planner.comfort_clearance = f()?,
            "intention.curvature_threshold" => self.intention.curvature_threshold = f()?,
            "intention.curvature_delta" => self.intention.curvature_delta = f()?,
            "intention.stop_distance" => self.intention.stop_distance = f()?,
            "intention.window" => self.intention.window = f()?,
            "intention.back_len" => self.intention.back_len = f()?,
            "intention.fwd_len" => self.intention.fwd_len = f()?,
            "intention.stroke" => self.intention.stroke = f()?,
            "intention.size" => self.intention.size = u()?,
            "intention.marker_radius" => self.intention.marker_radius = f()?,
            "dwa.v_samples" => self.dwa.v_samples = u()?,
            "dwa.w_samples" => self.dwa.w_samples = u()?,
            "dwa.horizon" => self.dwa.horizon = f()?,
            "dwa.dt_sim" => self.dwa.dt_sim = f()?,
            "dwa.dt_window" => self.dwa.dt_window = f()?,
            "dwa.alpha_heading" => self.dwa.alpha_heading = f()?,
            "dwa.beta_clearance" => self.dwa.beta_clearance = f()?,
            "dwa.gamma_velocity" => self.dwa.gamma_velocity = f()?,
            "dwa.safety_margin" => self.dwa.safety_margin = f()?,
            "dwa.clearance_cap" => self.dwa.clearance_cap = f()?,
            "net.channels" => self.net.channels = ul()?,
            "net.kernels" => self.net.kernels = ul()?,
            "net.feature_dim" => self.net.feature_dim = u()?,
            "net.embed_dim" => self.net.embed_dim = u()?,
            "net.feature_relu" => self.net.feature_relu = b()?,
            "train.lr0" => self.train.lr0 = f()?,
            "train.l2" => self.train.l2 = f()?,
            "train.batch" => self.train.batch = u()?,
            "train.epoch_samples" => self.train.epoch_samples = u()?,
            "train.epochs" => self.train.epochs = u()?,
            "train.rho" => self.train.rho = f()?,
            "train.eps" => self.train.eps = f()?,
            "train.eval_max" => self.train.eval_max = u()?,
            "collect.timeout_factor" => self.collect.timeout_factor = f()?,
            "collect.goal_tol" => self.collect.goal_tol = f()?,
            "collect.max_empty_window" => self.collect.max_empty_window = u()?,
            "collect.exec_noise" => self.collect.exec_noise = f()?,
            "bench.goal_radius" => self.bench.goal_radius = f()?,
            "bench.max_interventions" => self.bench.max_interventions = u()?,
            "bench.stall_window" => self.bench.stall_window = f()?,
            "bench.stall_dist" => self.bench.stall_dist = f()?,
            "bench.pursuit_lookahead" => self.bench.pursuit_lookahead = f()?,
            "bench.carrot" => self.bench.carrot = f()?,
            "bench.history_spacing" => self.bench.history_spacing = f()?,
            _ => return Err(BenchError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let e = |m: String| Err(BenchError::Config(m));
        if !(self.dt > 0.0) {
            return e("world.dt must be positive".into());
        }
        if let Err(err) = self.planner.validate(self.robot.kappa_max()) {
            return e(err.to_string());
        }
        if let Err(m) = self.intention.validate() {
            return e(m);
        }
        if let Err(m) = self.dwa.validate() {
            return e(m);
        }
        if let Err(err) = self.net.validate() {
            return e(err.to_string());
        }
        if let Err(err) = self.train.validate() {
            return e(err.to_string());
        }
        Ok(())
    }

    /// Applies `key = value` lines over the current values. `#` starts a
    /// comment; blank lines are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), BenchError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| BenchError::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream seed for a named purpose under the global seed.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, mixed with the global seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix(seed ^ splitmix(h))
}
