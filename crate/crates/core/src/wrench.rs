//! Rotor aerodynamics and the configuration-dependent allocation matrix.
//!
//! Each rotor produces thrust `μn²` and drag torque `κn²` along the negative
//! z axis of its own frame. The rotor frame has x along the arm, pointing
//! outward, and is rotated about that axis by the tilt angle.

use crate::actuators::ActuatorState;
use crate::spatial::{rotation_about_axis, Mat3, Vec3};
use crate::vehicle::{RotorGeometry, VehicleParams, ROTOR_COUNT};
use nalgebra::{Matrix6, Vector6};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WrenchError {
    #[error("rotor speed must be non-negative, got {0}")]
    NegativeSpeed(f64),
}

/// Force and moment about the center of gravity, body frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub force: Vec3,
    pub moment: Vec3,
}

impl Wrench {
    pub fn new(force: Vec3, moment: Vec3) -> Self {
        Self { force, moment }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Stacked as `(Fx, Fy, Fz, Mx, My, Mz)`.
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.moment.x,
            self.moment.y,
            self.moment.z,
        )
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            force: Vec3::new(v[0], v[1], v[2]),
            moment: Vec3::new(v[3], v[4], v[5]),
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        self.to_vector().into()
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(&self, other: &Wrench) -> f64 {
        (self.to_vector() - other.to_vector()).amax()
    }
}

impl std::ops::Add for Wrench {
    type Output = Wrench;

    fn add(self, rhs: Wrench) -> Wrench {
        Wrench::new(self.force + rhs.force, self.moment + rhs.moment)
    }
}

pub fn rotor_thrust(n: f64, lift_coeff: f64) -> Result<f64, WrenchError> {
    if n < 0.0 {
        return Err(WrenchError::NegativeSpeed(n));
    }
    Ok(lift_coeff * n * n)
}

pub fn rotor_drag_torque(n: f64, drag_coeff: f64) -> Result<f64, WrenchError> {
    if n < 0.0 {
        return Err(WrenchError::NegativeSpeed(n));
    }
    Ok(drag_coeff * n * n)
}

/// `R_BRi`: rotates rotor-frame vectors of rotor `i` into the body frame.
pub fn rotor_frame_rotation(geometry: &RotorGeometry, i: usize, tilt: f64) -> Mat3 {
    let rotor = geometry.rotor(i);
    let align = rotation_about_axis(&Vec3::z(), rotor.azimuth).expect("z is a unit axis");
    let tilt_rot =
        rotation_about_axis(&rotor.tilt_axis, tilt).expect("tilt axes are unit by construction");
    tilt_rot * align
}

/// Wrench of rotor `i` alone, for a squared speed `speed_sq` and tilt `tilt`.
pub fn single_rotor_wrench(
    params: &VehicleParams,
    geometry: &RotorGeometry,
    i: usize,
    speed_sq: f64,
    tilt: f64,
) -> Wrench {
    let r = rotor_frame_rotation(geometry, i, tilt);
    let rotor = geometry.rotor(i);
    let force = r * (Vec3::z() * (-params.lift_coeff * speed_sq));
    let drag = r * (Vec3::z() * (-rotor.spin * params.drag_coeff * speed_sq));
    Wrench::new(force, drag + rotor.position.cross(&force))
}

/// Total rotor wrench in the body frame for the given actuator state.
pub fn body_wrench(
    state: &ActuatorState,
    params: &VehicleParams,
    geometry: &RotorGeometry,
) -> Wrench {
    (0..ROTOR_COUNT).fold(Wrench::zero(), |acc, i| {
        let n = state.speeds[i];
        acc + single_rotor_wrench(params, geometry, i, n * n, state.tilts[i])
    })
}

/// `A(α)`: maps squared rotor speeds to the body wrench. Rows are
/// `(Fx, Fy, Fz, Mx, My, Mz)`, column `i` belongs to rotor `i`.
pub fn allocation_matrix(
    tilts: &[f64; ROTOR_COUNT],
    params: &VehicleParams,
    geometry: &RotorGeometry,
) -> Matrix6<f64> {
    let mut a = Matrix6::zeros();
    for (i, &tilt) in tilts.iter().enumerate() {
        let col = single_rotor_wrench(params, geometry, i, 1.0, tilt).to_vector();
        a.set_column(i, &col);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::{default_params, rotor_geometry};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn setup() -> (VehicleParams, RotorGeometry) {
        let p = default_params();
        let g = rotor_geometry(&p);
        (p, g)
    }

    #[test]
    fn square_laws() {
        let p = default_params();
        assert_eq!(rotor_thrust(0.0, p.lift_coeff).unwrap(), 0.0);
        assert!((rotor_thrust(p.n_max, p.lift_coeff).unwrap() - 13.7).abs() < 1e-9);
        let t1 = rotor_thrust(300.0, p.lift_coeff).unwrap();
        let t2 = rotor_thrust(600.0, p.lift_coeff).unwrap();
        assert!((t2 / t1 - 4.0).abs() < 1e-12);
        assert!(rotor_thrust(-1.0, p.lift_coeff).is_err());

        assert_eq!(rotor_drag_torque(0.0, p.drag_coeff).unwrap(), 0.0);
        let d1 = rotor_drag_torque(300.0, p.drag_coeff).unwrap();
        let d2 = rotor_drag_torque(600.0, p.drag_coeff).unwrap();
        assert!((d2 / d1 - 4.0).abs() < 1e-12);
        assert_eq!(
            rotor_drag_torque(-2.0, p.drag_coeff),
            Err(WrenchError::NegativeSpeed(-2.0))
        );
    }

    #[test]
    fn rotor_axis_under_tilt() {
        let (_, g) = setup();
        for i in 0..ROTOR_COUNT {
            let z0 = rotor_frame_rotation(&g, i, 0.0) * Vec3::z();
            assert!((z0 - Vec3::z()).norm() < 1e-15);
            let z1 = rotor_frame_rotation(&g, i, FRAC_PI_2) * Vec3::z();
            assert!(z1.z.abs() < 1e-15);
            assert!(z1.dot(&g.rotor(i).tilt_axis).abs() < 1e-15);
            let z2 = rotor_frame_rotation(&g, i, PI) * Vec3::z();
            assert!((z2 + Vec3::z()).norm() < 1e-15);
            // rotor x stays on the arm
            let x = rotor_frame_rotation(&g, i, 0.9) * Vec3::x();
            assert!((x - g.rotor(i).tilt_axis).norm() < 1e-15);
        }
    }

    #[test]
    fn untilted_equal_speeds_give_pure_lift() {
        let (p, g) = setup();
        let n0 = 500.0;
        let w = body_wrench(&ActuatorState::uniform(n0, 0.0), &p, &g);
        let lift = 6.0 * p.lift_coeff * n0 * n0;
        assert!((w.force - Vec3::new(0.0, 0.0, -lift)).norm() < 1e-12);
        assert!(w.moment.norm() < 1e-12);
        assert_eq!(
            body_wrench(&ActuatorState::default(), &p, &g),
            Wrench::zero()
        );
    }

    #[test]
    fn single_rotor_hand_computation() {
        // rotor 2 (azimuth 60°), tilt 0.4 rad, written out by hand
        let (p, g) = setup();
        let (n, a) = (620.0, 0.4_f64);
        let mut st = ActuatorState::default();
        st.speeds[1] = n;
        st.tilts[1] = a;
        let w = body_wrench(&st, &p, &g);

        let phi = PI / 3.0;
        let thrust = p.lift_coeff * n * n;
        let axis = Vec3::new(a.sin() * phi.sin(), -a.sin() * phi.cos(), a.cos());
        let force = -axis * thrust;
        let r = Vec3::new(p.arm_length * phi.cos(), p.arm_length * phi.sin(), 0.0);
        let moment = r.cross(&force) + axis * (p.drag_coeff * n * n);
        assert!((w.force - force).norm() < 1e-12);
        assert!((w.moment - moment).norm() < 1e-12);
    }

    #[test]
    fn hover_column_sum() {
        let (p, g) = setup();
        let n0 = 480.0;
        let a = allocation_matrix(&[0.0; 6], &p, &g);
        let w = a * Vector6::repeat(n0 * n0);
        let expect = Vector6::new(0.0, 0.0, -6.0 * p.lift_coeff * n0 * n0, 0.0, 0.0, 0.0);
        assert!((w - expect).amax() < 1e-12);
    }

    proptest! {
        #[test]
        fn matrix_reproduces_geometric_sum(
            speeds in prop::array::uniform6(0.0f64..1100.0),
            tilts in prop::array::uniform6(-7.0f64..7.0),
        ) {
            let (p, g) = setup();
            let st = ActuatorState { speeds, tilts };
            let sq = Vector6::from_iterator(speeds.iter().map(|n| n * n));
            let lin = allocation_matrix(&tilts, &p, &g) * sq;
            let geo = body_wrench(&st, &p, &g).to_vector();
            prop_assert!((lin - geo).amax() < 1e-12 * geo.amax().max(1.0));
        }

        #[test]
        fn single_rotor_force_norm_is_tilt_invariant(n in 0.0f64..1100.0, a in -7.0f64..7.0, i in 0usize..6) {
            let (p, g) = setup();
            let w = single_rotor_wrench(&p, &g, i, n * n, a);
            prop_assert!((w.force.norm() - p.lift_coeff * n * n).abs() < 1e-12);
        }
    }
}
