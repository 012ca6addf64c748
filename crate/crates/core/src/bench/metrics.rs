use serde::{Deserialize, Serialize};

use super::run::Method;
use super::BenchError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub task_id: String,
    pub map_id: String,
    pub method: Method,
    pub success: bool,
    pub failure: Option<String>,
    pub interventions: usize,
    pub goals_reached: usize,
    /// Task time (s).
    pub time: f64,
    /// Distance traveled (m).
    pub distance: f64,
    /// Mean jerk magnitude (m/s^3).
    pub smoothness: Option<f64>,
    pub plan_fallbacks: usize,
}

/// Mean jerk magnitude of uniformly sampled velocity vectors: central
/// differences for acceleration, forward differences of those for jerk.
/// Exact for quadratic velocity profiles. Segments shorter than four
/// samples are skipped; having none left is an error.
pub fn mean_jerk(segments: &[Vec<[f64; 2]>], dt: f64) -> Result<f64, BenchError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in segments.iter().filter(|s| s.len() >= 4) {
        let acc: Vec<[f64; 2]> = v
            .windows(3)
            .map(|w| [(w[2][0] - w[0][0]) / (2.0 * dt), (w[2][1] - w[0][1]) / (2.0 * dt)])
            .collect();
        for a in acc.windows(2) {
            let j = [(a[1][0] - a[0][0]) / dt, (a[1][1] - a[0][1]) / dt];
            sum += j[0].hypot(j[1]);
            n += 1;
        }
    }
    if n == 0 {
        return Err(BenchError::Metrics(
            "trace too short for a jerk estimate (need 4 samples)".into(),
        ));
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_profile_has_exact_jerk() {
        let dt = 0.1;
        let v: Vec<[f64; 2]> = (0..20).map(|k| [(k as f64 * dt).powi(2), 0.0]).collect();
        assert!((mean_jerk(&[v.clone()], dt).unwrap() - 2.0).abs() < 1e-9);
        assert!((mean_jerk(&[v[..4].to_vec()], dt).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn short_traces_are_rejected() {
        let v = vec![[0.0, 0.0]; 3];
        assert!(mean_jerk(&[v.clone(), v], 0.1).is_err());
        assert!(mean_jerk(&[], 0.1).is_err());
    }

    #[test]
    fn constant_velocity_is_jerk_free() {
        let v = vec![[0.3, 0.1]; 10];
        assert_eq!(mean_jerk(&[v], 0.1).unwrap(), 0.0);
    }
}
