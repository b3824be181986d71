//! Newton–Euler rigid-body dynamics and the closed-loop simulation step.

use crate::actuators::{step_actuators, ActuatorState};
use crate::allocation::{select_mask, AllocationContext, AllocationError};
use crate::control::{
    controller_step, ControllerGains, PositionIntegrator, Setpoint, StateEstimate,
};
use crate::spatial::{body_to_inertial, UnitQuat, Vec3};
use crate::vehicle::{RotorGeometry, VehicleParams, ROTOR_COUNT};
use crate::wrench::{body_wrench, Wrench};
use nalgebra::Vector4;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("allocation failed at t = {time:.4} s: {source}")]
    Allocation {
        time: f64,
        #[source]
        source: AllocationError,
    },
    #[error("tilt unit {rotor} reached its winding limit at t = {time:.4} s")]
    WindingFault { rotor: usize, time: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidBodyState {
    /// Inertial position, m.
    pub position: Vec3,
    /// Body-frame velocity, m/s.
    pub velocity: Vec3,
    pub attitude: UnitQuat,
    /// Body rates, rad/s.
    pub rates: Vec3,
}

impl RigidBodyState {
    pub fn inertial_velocity(&self) -> Vec3 {
        body_to_inertial(&self.attitude) * self.velocity
    }

    pub fn kinetic_energy(&self, params: &VehicleParams) -> f64 {
        0.5 * params.mass * self.velocity.norm_squared()
            + 0.5 * self.rates.dot(&(params.inertia * self.rates))
    }

    /// Angular momentum about the center of gravity, inertial frame.
    pub fn angular_momentum(&self, params: &VehicleParams) -> Vec3 {
        body_to_inertial(&self.attitude) * (params.inertia * self.rates)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub position: Vec3,
    pub velocity: Vec3,
    /// `q̇` as `[w, x, y, z]`.
    pub attitude: Vector4<f64>,
    pub rates: Vec3,
}

fn quat_vec(q: &UnitQuat) -> Vector4<f64> {
    Vector4::from(q.to_array())
}

/// Body-rate kinematics `q̇ = ½·q ⊗ (0, ω)`.
fn quat_rate(q: &Vector4<f64>, w: &Vec3) -> Vector4<f64> {
    let (qw, qv) = (q[0], Vec3::new(q[1], q[2], q[3]));
    let dw = -0.5 * qv.dot(w);
    let dv = (w * qw + qv.cross(w)) * 0.5;
    Vector4::new(dw, dv.x, dv.y, dv.z)
}

pub fn derivative(
    body: &RigidBodyState,
    wrench: &Wrench,
    params: &VehicleParams,
) -> StateDerivative {
    let r_ib = body_to_inertial(&body.attitude);
    let weight = Vec3::new(0.0, 0.0, -params.mass * params.gravity);
    let force = wrench.force + r_ib.transpose() * weight;
    let w = body.rates;
    let j_w = params.inertia * w;
    let inv_j = params
        .inertia
        .try_inverse()
        .expect("validated inertia is invertible");
    StateDerivative {
        position: r_ib * body.velocity,
        velocity: force / params.mass - w.cross(&body.velocity),
        attitude: quat_rate(&quat_vec(&body.attitude), &w),
        rates: inv_j * (wrench.moment - w.cross(&j_w)),
    }
}

fn advance(body: &RigidBodyState, d: &StateDerivative, h: f64) -> RigidBodyState {
    let q = quat_vec(&body.attitude) + d.attitude * h;
    RigidBodyState {
        position: body.position + d.position * h,
        velocity: body.velocity + d.velocity * h,
        attitude: UnitQuat::new(q[0], q[1], q[2], q[3]).expect("attitude stays away from zero"),
        rates: body.rates + d.rates * h,
    }
}

/// Classical fourth-order Runge–Kutta step. The wrench is re-evaluated at
/// every stage; the attitude is renormalized after each stage.
pub fn integrate<F>(
    body: &RigidBodyState,
    wrench_fn: F,
    params: &VehicleParams,
    dt: f64,
) -> RigidBodyState
where
    F: Fn(&RigidBodyState) -> Wrench,
{
    let k1 = derivative(body, &wrench_fn(body), params);
    let s2 = advance(body, &k1, 0.5 * dt);
    let k2 = derivative(&s2, &wrench_fn(&s2), params);
    let s3 = advance(body, &k2, 0.5 * dt);
    let k3 = derivative(&s3, &wrench_fn(&s3), params);
    let s4 = advance(body, &k3, dt);
    let k4 = derivative(&s4, &wrench_fn(&s4), params);
    let combined = StateDerivative {
        position: (k1.position + (k2.position + k3.position) * 2.0 + k4.position) / 6.0,
        velocity: (k1.velocity + (k2.velocity + k3.velocity) * 2.0 + k4.velocity) / 6.0,
        attitude: (k1.attitude + (k2.attitude + k3.attitude) * 2.0 + k4.attitude) / 6.0,
        rates: (k1.rates + (k2.rates + k3.rates) * 2.0 + k4.rates) / 6.0,
    };
    advance(body, &combined, dt)
}

/// Unmodeled external wrench: seeded white noise held over each control
/// tick plus a constant bias, body frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Disturbance {
    /// N, per axis.
    pub force_sigma: f64,
    /// N·m, per axis.
    pub torque_sigma: f64,
    pub force_bias: Vec3,
    pub torque_bias: Vec3,
}

impl Disturbance {
    /// Noise level used by the built-in scenarios that exercise disturbance
    /// rejection.
    pub fn default_noise() -> Self {
        Self {
            force_sigma: 0.3,
            torque_sigma: 0.01,
            ..Default::default()
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::default()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Wrench {
        let mut draw = |sigma: f64| -> Vec3 {
            if sigma == 0.0 {
                return Vec3::zeros();
            }
            Vec3::from_fn(|_, _| {
                let z: f64 = StandardNormal.sample(rng);
                z * sigma
            })
        };
        let force = draw(self.force_sigma) + self.force_bias;
        let moment = draw(self.torque_sigma) + self.torque_bias;
        Wrench::new(force, moment)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub dt_phys: f64,
    pub dt_ctrl: f64,
    /// Arm-to-vertical angle below which the arm's rotor pair is dropped, rad.
    pub mask_threshold: f64,
    /// Apply commands to the actuators instantly instead of through their
    /// dynamics.
    pub instant_actuators: bool,
    pub disturbance: Disturbance,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt_phys: 1e-3,
            dt_ctrl: 4e-3,
            mask_threshold: 2f64.to_radians(),
            instant_actuators: false,
            disturbance: Disturbance::default(),
        }
    }
}

impl SimSettings {
    pub fn substeps(&self) -> usize {
        (self.dt_ctrl / self.dt_phys).round() as usize
    }
}

/// One control-tick snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRecord {
    pub time: f64,
    pub position: Vec3,
    pub attitude: [f64; 4],
    pub rates: Vec3,
    pub tilts: [f64; ROTOR_COUNT],
    pub speeds: [f64; ROTOR_COUNT],
    pub commanded: Wrench,
    pub realized: Wrench,
    pub mask_size: usize,
    pub saturated: [bool; ROTOR_COUNT],
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub body: RigidBodyState,
    pub actuators: ActuatorState,
    pub integrator: PositionIntegrator,
    pub allocation: AllocationContext,
    ticks: u64,
    rng: ChaCha8Rng,
}

impl SimState {
    pub fn new(
        params: &VehicleParams,
        geometry: &RotorGeometry,
        body: RigidBodyState,
        actuators: ActuatorState,
        seed: u64,
    ) -> Self {
        Self {
            body,
            actuators,
            integrator: PositionIntegrator::default(),
            allocation: AllocationContext::new(params, geometry, actuators.tilts),
            ticks: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Level hover at `position` with rotors spinning at hover speed.
    pub fn hovering(
        params: &VehicleParams,
        geometry: &RotorGeometry,
        position: Vec3,
        seed: u64,
    ) -> Self {
        let body = RigidBodyState {
            position,
            ..Default::default()
        };
        Self::new(
            params,
            geometry,
            body,
            ActuatorState::uniform(params.hover_speed(), 0.0),
            seed,
        )
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn estimate(&self) -> StateEstimate {
        StateEstimate {
            position: self.body.position,
            velocity: self.body.inertial_velocity(),
            attitude: self.body.attitude,
            rates: self.body.rates,
        }
    }
}

/// Runs one control tick followed by the physics substeps that fill it.
/// The returned record is the snapshot at the start of the tick, after the
/// new command has been computed.
pub fn simulate_step(
    sim: &mut SimState,
    setpoint: &Setpoint,
    gains: &ControllerGains,
    params: &VehicleParams,
    geometry: &RotorGeometry,
    settings: &SimSettings,
) -> Result<LogRecord, SimError> {
    let time = sim.ticks as f64 * settings.dt_ctrl;
    let est = sim.estimate();
    let commanded = controller_step(
        setpoint,
        &est,
        &mut sim.integrator,
        gains,
        params,
        settings.dt_ctrl,
    );
    let mask = select_mask(&setpoint.attitude, geometry, settings.mask_threshold);
    let alloc = sim
        .allocation
        .allocate(&commanded, mask)
        .map_err(|source| SimError::Allocation { time, source })?;
    let command = alloc.command;
    sim.integrator.frozen = command.any_saturated();
    if settings.instant_actuators {
        sim.actuators = command.as_state();
    }

    let record = LogRecord {
        time,
        position: sim.body.position,
        attitude: sim.body.attitude.to_array(),
        rates: sim.body.rates,
        tilts: sim.actuators.tilts,
        speeds: sim.actuators.speeds,
        commanded,
        realized: body_wrench(&sim.actuators, params, geometry),
        mask_size: mask.len(),
        saturated: command.saturated,
    };

    let disturbance = if settings.disturbance.is_zero() {
        Wrench::zero()
    } else {
        settings.disturbance.sample(&mut sim.rng)
    };
    for k in 0..settings.substeps() {
        let rotor = body_wrench(&sim.actuators, params, geometry);
        let total = rotor + disturbance;
        sim.body = integrate(&sim.body, |_| total, params, settings.dt_phys);
        if !settings.instant_actuators {
            let faults = step_actuators(
                &mut sim.actuators,
                &command.speeds,
                &command.tilts,
                params,
                settings.dt_phys,
            );
            if let Some(&rotor) = faults.first() {
                return Err(SimError::WindingFault {
                    rotor: rotor + 1,
                    time: time + (k + 1) as f64 * settings.dt_phys,
                });
            }
        }
    }
    sim.ticks += 1;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::{default_params, rotor_geometry};
    use std::f64::consts::PI;

    fn no_gravity() -> VehicleParams {
        VehicleParams {
            gravity: 0.0,
            ..default_params()
        }
    }

    #[test]
    fn straight_line_without_forces() {
        let p = no_gravity();
        let mut body = RigidBodyState {
            velocity: Vec3::new(1.0, -0.5, 0.25),
            ..Default::default()
        };
        let v_inertial = body.inertial_velocity();
        for _ in 0..1000 {
            body = integrate(&body, |_| Wrench::zero(), &p, 1e-3);
        }
        assert!((body.position - v_inertial).norm() < 1e-12);
    }

    #[test]
    fn free_fall() {
        let p = default_params();
        let d = derivative(&RigidBodyState::default(), &Wrench::zero(), &p);
        // level: body z is down, so gravity is +z in body axes
        assert!((d.velocity - Vec3::new(0.0, 0.0, p.gravity)).norm() < 1e-15);
        let mut body = RigidBodyState::default();
        for _ in 0..1000 {
            body = integrate(&body, |_| Wrench::zero(), &p, 1e-3);
        }
        assert!((body.position.z + p.gravity / 2.0).abs() < 1e-9);
        assert!(body.position.xy().norm() < 1e-12);
    }

    #[test]
    fn principal_axis_spin_is_steady() {
        let p = no_gravity();
        let body = RigidBodyState {
            rates: Vec3::new(0.0, 0.0, 3.0),
            ..Default::default()
        };
        let d = derivative(&body, &Wrench::zero(), &p);
        assert_eq!(d.rates, Vec3::zeros());
    }

    #[test]
    fn hover_is_an_equilibrium() {
        let p = default_params();
        let g = rotor_geometry(&p);
        let mut sim = SimState::hovering(&p, &g, Vec3::new(0.0, 0.0, 1.0), 1);
        let settings = SimSettings::default();
        let sp = Setpoint::hold(Vec3::new(0.0, 0.0, 1.0), UnitQuat::identity());
        for _ in 0..250 {
            let before = sim.body;
            simulate_step(
                &mut sim,
                &sp,
                &ControllerGains::default(),
                &p,
                &g,
                &settings,
            )
            .unwrap();
            assert!((sim.body.position - before.position).norm() < 1e-6);
            assert!(sim.body.attitude.angle_to(&before.attitude) < 1e-6);
        }
    }

    #[test]
    fn step_setpoint_accelerates_toward_target() {
        let p = default_params();
        let g = rotor_geometry(&p);
        let mut sim = SimState::hovering(&p, &g, Vec3::zeros(), 1);
        let settings = SimSettings::default();
        let sp = Setpoint::hold(Vec3::new(1.0, -1.0, 0.5), UnitQuat::identity());
        for _ in 0..25 {
            simulate_step(
                &mut sim,
                &sp,
                &ControllerGains::default(),
                &p,
                &g,
                &settings,
            )
            .unwrap();
        }
        let v = sim.body.inertial_velocity();
        assert!(v.x > 0.0 && v.y < 0.0 && v.z > 0.0, "{v:?}");
        for _ in 0..2000 {
            simulate_step(
                &mut sim,
                &sp,
                &ControllerGains::default(),
                &p,
                &g,
                &settings,
            )
            .unwrap();
        }
        // the integral term leaves a slow tail; require 95% of the step
        assert!((sim.body.position - sp.position).norm() < 0.05 * sp.position.norm());
    }

    #[test]
    fn inverted_hover_is_sustained() {
        let p = default_params();
        let g = rotor_geometry(&p);
        let inverted = UnitQuat::from_axis_angle(&Vec3::y(), PI);
        let body = RigidBodyState {
            attitude: inverted,
            ..Default::default()
        };
        let mut sim = SimState::new(&p, &g, body, ActuatorState::uniform(p.hover_speed(), PI), 3);
        let settings = SimSettings::default();
        let sp = Setpoint::hold(Vec3::zeros(), inverted);
        for _ in 0..250 {
            simulate_step(
                &mut sim,
                &sp,
                &ControllerGains::default(),
                &p,
                &g,
                &settings,
            )
            .unwrap();
        }
        assert!(sim.body.position.norm() < 1e-4);
    }

    #[test]
    fn instant_actuators_realize_the_command() {
        let p = default_params();
        let g = rotor_geometry(&p);
        let mut sim = SimState::hovering(&p, &g, Vec3::zeros(), 1);
        let settings = SimSettings {
            instant_actuators: true,
            ..Default::default()
        };
        let sp = Setpoint::hold(
            Vec3::new(0.5, 0.2, -0.3),
            UnitQuat::from_axis_angle(&Vec3::new(1.0, 0.5, 0.0), 0.6),
        );
        for _ in 0..500 {
            let rec = simulate_step(
                &mut sim,
                &sp,
                &ControllerGains::default(),
                &p,
                &g,
                &settings,
            )
            .unwrap();
            assert!(!rec.saturated.iter().any(|&s| s));
            assert!(rec.commanded.max_abs_diff(&rec.realized) < 1e-9);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let p = default_params();
        let g = rotor_geometry(&p);
        let settings = SimSettings {
            disturbance: Disturbance::default_noise(),
            ..Default::default()
        };
        let run = || {
            let mut sim = SimState::hovering(&p, &g, Vec3::zeros(), 99);
            for _ in 0..100 {
                simulate_step(
                    &mut sim,
                    &Setpoint::default(),
                    &ControllerGains::default(),
                    &p,
                    &g,
                    &settings,
                )
                .unwrap();
            }
            sim.body
        };
        assert_eq!(run(), run());
    }
}
