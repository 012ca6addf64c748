//! Pose estimation on the known map: a fixed-size Monte-Carlo particle
//! filter over simulated range beams, and a noisy-truth shortcut.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::world::{wrap_angle, OccupancyGrid, Pose2D};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub pose: Pose2D,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleSet {
    particles: Vec<Particle>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionNoise {
    pub sigma_xy: f64,
    pub sigma_theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeScan {
    /// `(bearing, range)` pairs, bearing relative to the robot heading.
    pub beams: Vec<(f64, f64)>,
    pub max_range: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocMode {
    NoisyTruth,
    Mcl,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocConfig {
    pub mode: LocMode,
    pub particles: usize,
    pub sigma_z: f64,
    pub beams: usize,
    pub max_range: f64,
    /// Noise added to simulated scans (m).
    pub scan_noise: f64,
    pub motion: MotionNoise,
    /// Spread of the initial particle cloud around the start pose.
    pub init_sigma_xy: f64,
    pub init_sigma_theta: f64,
    pub noisy_sigma_xy: f64,
    pub noisy_sigma_theta: f64,
}

impl Default for LocConfig {
    fn default() -> Self {
        Self {
            mode: LocMode::NoisyTruth,
            particles: 500,
            sigma_z: 0.2,
            beams: 24,
            max_range: 8.0,
            scan_noise: 0.05,
            motion: MotionNoise {
                sigma_xy: 0.01,
                sigma_theta: 0.01,
            },
            init_sigma_xy: 0.2,
            init_sigma_theta: 0.1,
            noisy_sigma_xy: 0.05,
            noisy_sigma_theta: 2f64.to_radians(),
        }
    }
}

/// Result flags of a measurement update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CorrectReport {
    /// Every particle had zero likelihood; weights were reset to uniform.
    pub kidnapped: bool,
    pub resampled: bool,
    /// Effective sample size before any resampling.
    pub ess: f64,
}

fn gauss(rng: &mut impl Rng, sigma: f64) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).unwrap().sample(rng)
    } else {
        0.0
    }
}

impl ParticleSet {
    /// Equal-weight set from the given poses.
    pub fn from_poses(poses: impl IntoIterator<Item = Pose2D>) -> Self {
        let mut particles: Vec<Particle> = poses.into_iter().map(|pose| Particle { pose, weight: 0.0 }).collect();
        assert!(!particles.is_empty(), "particle set needs at least one particle");
        let w = 1.0 / particles.len() as f64;
        for p in &mut particles {
            p.weight = w;
        }
        Self { particles }
    }

    /// Set with the given weights, renormalized to sum to 1. Returns `None`
    /// when the set is empty or the weights are not positive and finite.
    pub fn from_particles(mut particles: Vec<Particle>) -> Option<Self> {
        let total: f64 = particles.iter().map(|p| p.weight).sum();
        if particles.is_empty() || !(total > 0.0 && total.is_finite()) || particles.iter().any(|p| p.weight < 0.0) {
            return None;
        }
        for p in &mut particles {
            p.weight /= total;
        }
        Some(Self { particles })
    }

    pub fn gaussian(center: &Pose2D, sigma_xy: f64, sigma_theta: f64, n: usize, rng: &mut impl Rng) -> Self {
        Self::from_poses((0..n).map(|_| {
            Pose2D::new(
                center.x + gauss(rng, sigma_xy),
                center.y + gauss(rng, sigma_xy),
                center.theta + gauss(rng, sigma_theta),
            )
        }))
    }

    /// Uniform over free cells with uniform heading.
    pub fn uniform_free(grid: &OccupancyGrid, n: usize, rng: &mut impl Rng) -> Self {
        let free: Vec<(usize, usize)> = (0..grid.height())
            .flat_map(|j| (0..grid.width()).map(move |i| (i, j)))
            .filter(|&(i, j)| !grid.cell(i, j).is_blocked())
            .collect();
        assert!(!free.is_empty(), "map has no free cell");
        let half = 0.5 * grid.resolution();
        Self::from_poses((0..n).map(|_| {
            let (i, j) = free[rng.gen_range(0..free.len())];
            let m = grid.to_map_frame(grid.cell_to_world(i, j));
            let p = grid.to_world_frame([m[0] + rng.gen_range(-half..half), m[1] + rng.gen_range(-half..half)]);
            Pose2D::new(p[0], p[1], rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
        }))
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    pub fn ess(&self) -> f64 {
        let s2: f64 = self.particles.iter().map(|p| p.weight * p.weight).sum();
        1.0 / s2
    }

    /// Motion update: compose the odometry delta in each particle's frame,
    /// then add zero-mean Gaussian noise. Weights are untouched.
    pub fn predict(&self, delta: (f64, f64, f64), noise: &MotionNoise, rng: &mut impl Rng) -> Self {
        let particles = self
            .particles
            .iter()
            .map(|p| {
                let moved = p.pose.compose(delta.0, delta.1, delta.2);
                Particle {
                    pose: Pose2D::new(
                        moved.x + gauss(rng, noise.sigma_xy),
                        moved.y + gauss(rng, noise.sigma_xy),
                        moved.theta + gauss(rng, noise.sigma_theta),
                    ),
                    weight: p.weight,
                }
            })
            .collect();
        Self { particles }
    }

    /// Measurement update with a Gaussian beam model, followed by systematic
    /// resampling when the effective sample size drops below N/2.
    pub fn correct(
        &self,
        scan: &RangeScan,
        grid: &OccupancyGrid,
        sigma_z: f64,
        rng: &mut impl Rng,
    ) -> (Self, CorrectReport) {
        let inv = 1.0 / (2.0 * sigma_z * sigma_z);
        let logw: Vec<f64> = self
            .particles
            .iter()
            .map(|p| {
                if p.weight <= 0.0 || grid.is_blocked_at(p.pose.xy()) {
                    return f64::NEG_INFINITY;
                }
                let mut ll = p.weight.ln();
                for &(bearing, z) in &scan.beams {
                    let zhat = expected_range(grid, &p.pose, bearing, scan.max_range);
                    ll -= (z - zhat) * (z - zhat) * inv;
                }
                ll
            })
            .collect();
        let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let n = self.particles.len();
        let mut report = CorrectReport::default();
        let mut out = self.clone();
        // the product of beam likelihoods underflows to zero for every particle
        if !(max.exp() > 0.0) {
            for p in &mut out.particles {
                p.weight = 1.0 / n as f64;
            }
            report.kidnapped = true;
            report.ess = n as f64;
            return (out, report);
        }
        let mut total = 0.0;
        for (p, &l) in out.particles.iter_mut().zip(&logw) {
            p.weight = (l - max).exp();
            total += p.weight;
        }
        for p in &mut out.particles {
            p.weight /= total;
        }
        report.ess = out.ess();
        if report.ess < n as f64 / 2.0 {
            out = out.resample(rng);
            report.resampled = true;
        }
        (out, report)
    }

    /// Systematic (low-variance) resampling; N is preserved and the result
    /// carries uniform weights.
    pub fn resample(&self, rng: &mut impl Rng) -> Self {
        let n = self.particles.len();
        let step = 1.0 / n as f64;
        let u0 = rng.gen_range(0.0..step);
        let mut out = Vec::with_capacity(n);
        let mut k = 0;
        let mut c = self.particles[0].weight;
        for m in 0..n {
            let u = u0 + m as f64 * step;
            while u > c && k + 1 < n {
                k += 1;
                c += self.particles[k].weight;
            }
            out.push(Particle {
                pose: self.particles[k].pose,
                weight: step,
            });
        }
        Self { particles: out }
    }

    /// Weighted mean position and circular mean heading.
    pub fn estimate(&self) -> Pose2D {
        let (mut x, mut y, mut s, mut c, mut w) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for p in &self.particles {
            x += p.weight * p.pose.x;
            y += p.weight * p.pose.y;
            s += p.weight * p.pose.theta.sin();
            c += p.weight * p.pose.theta.cos();
            w += p.weight;
        }
        Pose2D::new(x / w, y / w, s.atan2(c))
    }
}

/// Ray length from `pose` along `bearing`, `max_range` when nothing is hit.
pub fn expected_range(grid: &OccupancyGrid, pose: &Pose2D, bearing: f64, max_range: f64) -> f64 {
    grid.raycast(pose.xy(), pose.theta + bearing, max_range)
        .map_or(max_range, |h| h.distance.min(max_range))
}

/// Simulated range scan with `n` beams evenly spread over the full circle.
pub fn simulate_scan(
    grid: &OccupancyGrid,
    pose: &Pose2D,
    n: usize,
    max_range: f64,
    noise: f64,
    rng: &mut impl Rng,
) -> RangeScan {
    let beams = (0..n)
        .map(|k| {
            let bearing = wrap_angle(2.0 * std::f64::consts::PI * k as f64 / n as f64);
            let z = expected_range(grid, pose, bearing, max_range) + gauss(rng, noise);
            (bearing, z.clamp(0.0, max_range))
        })
        .collect();
    RangeScan { beams, max_range }
}

/// Per-run localization state used by the closed loop.
#[derive(Clone, Debug)]
pub enum Localizer {
    NoisyTruth {
        sigma_xy: f64,
        sigma_theta: f64,
    },
    Mcl {
        set: ParticleSet,
        cfg: LocConfig,
        last_truth: Pose2D,
    },
}

impl Localizer {
    pub fn new(cfg: &LocConfig, start: &Pose2D, rng: &mut impl Rng) -> Self {
        match cfg.mode {
            LocMode::NoisyTruth => Localizer::NoisyTruth {
                sigma_xy: cfg.noisy_sigma_xy,
                sigma_theta: cfg.noisy_sigma_theta,
            },
            LocMode::Mcl => Localizer::Mcl {
                set: ParticleSet::gaussian(start, cfg.init_sigma_xy, cfg.init_sigma_theta, cfg.particles, rng),
                cfg: *cfg,
                last_truth: *start,
            },
        }
    }

    /// Pose estimate after the robot moved to `truth`. Odometry is the true
    /// relative motion; the filter adds its own motion noise.
    pub fn update(&mut self, grid: &OccupancyGrid, truth: &Pose2D, rng: &mut impl Rng) -> Pose2D {
        match self {
            Localizer::NoisyTruth { sigma_xy, sigma_theta } => Pose2D::new(
                truth.x + gauss(rng, *sigma_xy),
                truth.y + gauss(rng, *sigma_xy),
                truth.theta + gauss(rng, *sigma_theta),
            ),
            Localizer::Mcl { set, cfg, last_truth } => {
                let delta = last_truth.delta_to(truth);
                let scan = simulate_scan(grid, truth, cfg.beams, cfg.max_range, cfg.scan_noise, rng);
                let moved = set.predict(delta, &cfg.motion, rng);
                let (next, _) = moved.correct(&scan, grid, cfg.sigma_z, rng);
                *set = next;
                *last_truth = *truth;
                set.estimate()
            }
        }
    }

    /// Re-seeds the filter around a known pose (after a manual reset).
    pub fn reset(&mut self, pose: &Pose2D, rng: &mut impl Rng) {
        if let Localizer::Mcl { set, cfg, last_truth } = self {
            *set = ParticleSet::gaussian(
                pose,
                cfg.init_sigma_xy * 0.25,
                cfg.init_sigma_theta * 0.25,
                cfg.particles,
                rng,
            );
            *last_truth = *pose;
        }
    }
}
