//! Frames, quaternions and rotation helpers.
//!
//! Conventions used throughout the crate:
//!
//! * Quaternions are Hamilton, scalar first.
//! * The inertial frame has z pointing up. The body frame has z pointing down.
//! * The attitude quaternion `q` describes the body relative to the *level
//!   frame*: a ground-fixed frame sharing the inertial x axis but with y and z
//!   flipped, so that `q = identity` is level flight with body z down.
//!   [`body_to_inertial`] composes the two and is the `R_IB` used by the
//!   controller and the dynamics.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpatialError {
    #[error("rotation axis must be unit length, got norm {0}")]
    NonUnitAxis(f64),
    #[error("cannot normalize a zero quaternion")]
    ZeroQuaternion,
}

/// Unit quaternion, Hamilton convention, scalar first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuat {
    w: f64,
    v: Vec3,
}

impl Default for UnitQuat {
    fn default() -> Self {
        Self::identity()
    }
}

impl UnitQuat {
    pub fn identity() -> Self {
        Self {
            w: 1.0,
            v: Vec3::zeros(),
        }
    }

    /// Builds a quaternion from raw components and normalizes it.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self, SpatialError> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n <= 0.0 {
            return Err(SpatialError::ZeroQuaternion);
        }
        Ok(Self {
            w: w / n,
            v: Vec3::new(x / n, y / n, z / n),
        })
    }

    /// Normalizes without checking; callers guarantee a non-degenerate input.
    pub(crate) fn normalized(w: f64, v: Vec3) -> Self {
        let n = (w * w + v.norm_squared()).sqrt();
        Self { w: w / n, v: v / n }
    }

    /// Rotation of `angle` radians about `axis`. The axis need not be unit;
    /// a zero axis yields the identity.
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        let half = 0.5 * angle;
        Self::normalized(half.cos(), axis / n * half.sin())
    }

    /// Exponential map of a rotation vector.
    pub fn from_scaled_axis(rotvec: &Vec3) -> Self {
        let angle = rotvec.norm();
        if angle < 1e-12 {
            // second order series keeps the map smooth at the origin
            return Self::normalized(1.0 - angle * angle / 8.0, rotvec * 0.5);
        }
        Self::from_axis_angle(rotvec, angle)
    }

    /// Logarithm map: the rotation vector with angle in `[0, π]`.
    pub fn to_scaled_axis(&self) -> Vec3 {
        let (w, v) = if self.w < 0.0 {
            (-self.w, -self.v)
        } else {
            (self.w, self.v)
        };
        let s = v.norm();
        if s < 1e-15 {
            return v * 2.0;
        }
        let angle = 2.0 * s.atan2(w);
        v * (angle / s)
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn vector(&self) -> Vec3 {
        self.v
    }

    /// Components as `[w, x, y, z]`.
    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.v.x, self.v.y, self.v.z]
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.v.norm_squared()).sqrt()
    }

    pub fn conjugate(&self) -> Self {
        Self {
            w: self.w,
            v: -self.v,
        }
    }

    /// The same rotation with every component negated.
    pub fn negated(&self) -> Self {
        Self {
            w: -self.w,
            v: -self.v,
        }
    }

    /// Hamilton product `self ⊗ rhs`, renormalized.
    pub fn multiply(&self, rhs: &Self) -> Self {
        let w = self.w * rhs.w - self.v.dot(&rhs.v);
        let v = rhs.v * self.w + self.v * rhs.w + self.v.cross(&rhs.v);
        Self::normalized(w, v)
    }

    pub fn to_rotation(&self) -> Mat3 {
        let (w, x, y, z) = (self.w, self.v.x, self.v.y, self.v.z);
        Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.to_rotation() * v
    }

    /// Advances the attitude by a constant body rate over `dt` using the
    /// exponential map.
    pub fn integrate(&self, omega_body: &Vec3, dt: f64) -> Self {
        self.multiply(&Self::from_scaled_axis(&(omega_body * dt)))
    }

    /// Geodesic rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        2.0 * self.v.norm().atan2(self.w.abs())
    }

    /// Geodesic angle of the rotation taking `self` onto `other`.
    pub fn angle_to(&self, other: &Self) -> f64 {
        other.multiply(&self.conjugate()).angle()
    }

    /// Intrinsic z-x-y Euler angles `(yaw, roll, pitch)` of the level-frame
    /// rotation, `R = Rz(yaw)·Rx(roll)·Ry(pitch)`. Only used for diagnostics.
    pub fn to_euler_zxy(&self) -> (f64, f64, f64) {
        let r = self.to_rotation();
        let roll = r[(2, 1)].clamp(-1.0, 1.0).asin();
        let pitch = (-r[(2, 0)]).atan2(r[(2, 2)]);
        let yaw = (-r[(0, 1)]).atan2(r[(1, 1)]);
        (yaw, roll, pitch)
    }
}

impl std::ops::Mul for UnitQuat {
    type Output = UnitQuat;

    fn mul(self, rhs: UnitQuat) -> UnitQuat {
        self.multiply(&rhs)
    }
}

/// Fixed rotation from the level frame (z down) to the inertial frame (z up).
pub fn level_to_inertial() -> Mat3 {
    Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0))
}

/// `R_IB`: rotates body-frame vectors into the inertial frame.
pub fn body_to_inertial(q: &UnitQuat) -> Mat3 {
    level_to_inertial() * q.to_rotation()
}

/// Rodrigues rotation about a unit axis, right-hand positive.
pub fn rotation_about_axis(axis: &Vec3, angle: f64) -> Result<Mat3, SpatialError> {
    let n = axis.norm();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(SpatialError::NonUnitAxis(n));
    }
    let k = axis.cross_matrix();
    let (s, c) = angle.sin_cos();
    Ok(Mat3::identity() + k * s + k * k * (1.0 - c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn quat_strategy() -> impl Strategy<Value = UnitQuat> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("non-degenerate", |(w, x, y, z)| {
                w * w + x * x + y * y + z * z > 1e-3
            })
            .prop_map(|(w, x, y, z)| UnitQuat::new(w, x, y, z).unwrap())
    }

    fn max_abs(m: &Mat3) -> f64 {
        m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    #[test]
    fn identity_is_neutral() {
        let q = UnitQuat::new(0.3, -0.2, 0.9, 0.1).unwrap();
        let p = UnitQuat::identity() * q;
        assert!((p.w() - q.w()).abs() < 1e-15);
        assert!((p.vector() - q.vector()).norm() < 1e-15);
    }

    #[test]
    fn conjugate_flips_vector_part() {
        let q = UnitQuat::new(0.5, 0.5, 0.5, 0.5).unwrap();
        assert_eq!(q.conjugate().to_array(), [0.5, -0.5, -0.5, -0.5]);
        assert_eq!(UnitQuat::identity().conjugate(), UnitQuat::identity());
    }

    #[test]
    fn quarter_turn_about_z_permutes_axes() {
        let r = UnitQuat::from_axis_angle(&Vec3::z(), FRAC_PI_2).to_rotation();
        let expected = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!(max_abs(&(r - expected)) < 1e-15);
        assert!(max_abs(&(UnitQuat::identity().to_rotation() - Mat3::identity())) == 0.0);
    }

    #[test]
    fn rodrigues_fixes_tilt_sign() {
        assert_eq!(
            rotation_about_axis(&Vec3::x(), 0.0).unwrap(),
            Mat3::identity()
        );
        let r = rotation_about_axis(&Vec3::x(), PI).unwrap();
        let expected = Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0));
        assert!(max_abs(&(r - expected)) < 1e-15);
        let a = 0.7;
        let ez = rotation_about_axis(&Vec3::x(), a).unwrap() * Vec3::z();
        assert!((ez - Vec3::new(0.0, -a.sin(), a.cos())).norm() < 1e-15);
        assert!(matches!(
            rotation_about_axis(&Vec3::new(1.0, 1.0, 0.0), 0.3),
            Err(SpatialError::NonUnitAxis(_))
        ));
    }

    #[test]
    fn integrate_zero_rate_and_full_turn() {
        let q = UnitQuat::new(0.2, 0.4, -0.1, 0.8).unwrap();
        assert_eq!(q.integrate(&Vec3::zeros(), 0.01), q);
        let turned = q.integrate(&Vec3::new(0.0, 0.0, TAU), 1.0);
        assert!(turned.angle_to(&q) < 1e-12);
    }

    #[test]
    fn integrate_matches_axis_angle_closed_form() {
        let mut q = UnitQuat::identity();
        let omega = Vec3::new(0.1, 0.0, 0.0);
        for _ in 0..1000 {
            q = q.integrate(&omega, 0.01);
        }
        let expected = UnitQuat::from_axis_angle(&Vec3::x(), 1.0);
        assert!(q.angle_to(&expected) < 1e-6);
        assert!((q.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn integrate_error_shrinks_with_step_for_varying_rate() {
        // a rate that changes with time makes the per-step update approximate;
        // halving the step must shrink the end-point error
        let run = |dt: f64| {
            let steps = (2.0 / dt).round() as usize;
            let mut q = UnitQuat::identity();
            for k in 0..steps {
                let t = k as f64 * dt;
                q = q.integrate(&Vec3::new(0.0, 0.0, 1.0 + t), dt);
            }
            q
        };
        // exact: rotation about z by ∫(1+t) = 2 + 2 = 4 rad
        let exact = UnitQuat::from_axis_angle(&Vec3::z(), 4.0);
        let e1 = run(0.01).angle_to(&exact);
        let e2 = run(0.005).angle_to(&exact);
        assert!(e2 < e1 * 0.6, "e1={e1} e2={e2}");
    }

    #[test]
    fn log_exp_round_trip() {
        let v = Vec3::new(0.3, -1.1, 0.4);
        let back = UnitQuat::from_scaled_axis(&v).to_scaled_axis();
        assert!((back - v).norm() < 1e-12);
    }

    #[test]
    fn euler_zxy_recovers_components() {
        let (yaw, roll, pitch) = (0.4, -0.3, 1.1);
        let q = UnitQuat::from_axis_angle(&Vec3::z(), yaw)
            * UnitQuat::from_axis_angle(&Vec3::x(), roll)
            * UnitQuat::from_axis_angle(&Vec3::y(), pitch);
        let (a, b, c) = q.to_euler_zxy();
        assert!((a - yaw).abs() < 1e-12 && (b - roll).abs() < 1e-12 && (c - pitch).abs() < 1e-12);
    }

    #[test]
    fn level_attitude_points_body_z_down() {
        let down = body_to_inertial(&UnitQuat::identity()) * Vec3::z();
        assert_eq!(down, Vec3::new(0.0, 0.0, -1.0));
    }

    proptest! {
        #[test]
        fn product_matches_matrix_composition(a in quat_strategy(), b in quat_strategy()) {
            let lhs = (a * b).to_rotation();
            let rhs = a.to_rotation() * b.to_rotation();
            prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
            prop_assert!(((a * b).norm() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn inverse_gives_identity(q in quat_strategy()) {
            let p = q * q.conjugate();
            prop_assert!((p.w() - 1.0).abs() < 1e-12);
            prop_assert!(p.vector().norm() < 1e-12);
        }

        #[test]
        fn rotation_is_proper_orthonormal(q in quat_strategy()) {
            let r = q.to_rotation();
            prop_assert!(max_abs(&(r * r.transpose() - Mat3::identity())) < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }
    }
}
