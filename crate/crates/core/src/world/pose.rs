use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// Planar robot configuration. `theta` is always kept in `(-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn distance(&self, other: &Pose2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Composes a displacement expressed in this pose's frame.
    pub fn compose(&self, dx: f64, dy: f64, dtheta: f64) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        Pose2D::new(self.x + c * dx - s * dy, self.y + s * dx + c * dy, self.theta + dtheta)
    }

    /// Relative displacement `(dx, dy, dtheta)` taking `self` to `other`,
    /// expressed in `self`'s frame. Inverse of [`Pose2D::compose`].
    pub fn delta_to(&self, other: &Pose2D) -> (f64, f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let ex = other.x - self.x;
        let ey = other.y - self.y;
        (c * ex + s * ey, -s * ex + c * ey, wrap_angle(other.theta - self.theta))
    }

    /// Expresses a world point in this pose's frame (x forward, y left).
    pub fn to_local(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        let ex = p[0] - self.x;
        let ey = p[1] - self.y;
        [c * ex + s * ey, -s * ex + c * ey]
    }

    pub fn to_world(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1]]
    }
}

/// Physical limits of the differential-drive robot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    pub radius: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub accel_v: f64,
    pub accel_omega: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            radius: 0.25,
            v_max: 0.6,
            omega_max: 1.2,
            accel_v: 0.5,
            accel_omega: 1.5,
        }
    }
}

impl RobotParams {
    /// Maximum path curvature reachable at full speed.
    pub fn kappa_max(&self) -> f64 {
        self.omega_max / self.v_max
    }
}

/// Normalized command: speed and steering both in `[-1, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub v: f64,
    pub steer: f64,
}

impl Control {
    /// Builds a control, clamping both components into `[-1, 1]`.
    /// NaN inputs become zero.
    pub fn new(v: f64, steer: f64) -> Self {
        let clamp = |a: f64| if a.is_nan() { 0.0 } else { a.clamp(-1.0, 1.0) };
        Self {
            v: clamp(v),
            steer: clamp(steer),
        }
    }

    pub fn from_physical(v: f64, omega: f64, robot: &RobotParams) -> Self {
        Self::new(v / robot.v_max, omega / robot.omega_max)
    }

    /// `(v, omega)` in m/s and rad/s.
    pub fn to_physical(&self, robot: &RobotParams) -> (f64, f64) {
        (self.v * robot.v_max, self.steer * robot.omega_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_boundaries() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.5 - 4.0 * PI) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn control_clamps() {
        let c = Control::new(3.0, -7.0);
        assert_eq!((c.v, c.steer), (1.0, -1.0));
        assert_eq!(Control::new(f64::NAN, 0.3).v, 0.0);
    }

    proptest! {
        #[test]
        fn wrap_in_range(a in -100.0f64..100.0) {
            let w = wrap_angle(a);
            prop_assert!(w > -PI && w <= PI);
            prop_assert!(((a - w) / (2.0 * PI) - ((a - w) / (2.0 * PI)).round()).abs() < 1e-9);
        }

        #[test]
        fn compose_delta_roundtrip(
            x in -10.0f64..10.0, y in -10.0f64..10.0, t in -3.0f64..3.0,
            dx in -2.0f64..2.0, dy in -2.0f64..2.0, dt in -3.0f64..3.0,
        ) {
            let p = Pose2D::new(x, y, t);
            let q = p.compose(dx, dy, dt);
            let (ex, ey, et) = p.delta_to(&q);
            prop_assert!((ex - dx).abs() < 1e-9 && (ey - dy).abs() < 1e-9);
            prop_assert!(wrap_angle(et - dt).abs() < 1e-9);
        }
    }
}
