//! Cascaded position and attitude control producing the desired body wrench.

use crate::spatial::{body_to_inertial, UnitQuat, Vec3};
use crate::vehicle::VehicleParams;
use crate::wrench::Wrench;

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    /// N/m
    pub kp_pos: f64,
    /// N·s/m
    pub kd_pos: f64,
    /// N/(m·s)
    pub ki_pos: f64,
    /// 1/s
    pub k_att: f64,
    /// N·m·s
    pub k_rate: f64,
    /// Per-axis bound on the integrated position error, m·s.
    pub integrator_limit: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            kp_pos: 12.0,
            kd_pos: 10.0,
            ki_pos: 2.0,
            k_att: 8.0,
            k_rate: 0.8,
            integrator_limit: 2.0,
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("gains.kp_pos", self.kp_pos),
            ("gains.kd_pos", self.kd_pos),
            ("gains.ki_pos", self.ki_pos),
            ("gains.k_att", self.k_att),
            ("gains.k_rate", self.k_rate),
            ("gains.integrator_limit", self.integrator_limit),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name}: must be finite and >= 0, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Setpoint {
    /// Inertial position, m.
    pub position: Vec3,
    /// Inertial velocity, m/s.
    pub velocity: Vec3,
    /// Inertial acceleration, m/s².
    pub acceleration: Vec3,
    pub attitude: UnitQuat,
}

impl Setpoint {
    pub fn hold(position: Vec3, attitude: UnitQuat) -> Self {
        Self {
            position,
            attitude,
            ..Default::default()
        }
    }
}

/// State as seen by the controller.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateEstimate {
    /// Inertial, m.
    pub position: Vec3,
    /// Inertial, m/s.
    pub velocity: Vec3,
    pub attitude: UnitQuat,
    /// Body rates, rad/s.
    pub rates: Vec3,
}

/// Clamped integral of the inertial position error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PositionIntegrator {
    pub value: Vec3,
    pub frozen: bool,
}

impl PositionIntegrator {
    pub fn accumulate(&mut self, error: &Vec3, dt: f64, limit: f64) {
        if self.frozen {
            return;
        }
        self.value = (self.value + error * dt).map(|v| v.clamp(-limit, limit));
    }
}

/// Desired force in the body frame. PID on the inertial position error with
/// weight compensation and acceleration feedforward, rotated into body axes.
pub fn position_control(
    sp: &Setpoint,
    est: &StateEstimate,
    integrator: &mut PositionIntegrator,
    gains: &ControllerGains,
    params: &VehicleParams,
    dt: f64,
) -> Vec3 {
    let p_err = sp.position - est.position;
    let v_err = sp.velocity - est.velocity;
    integrator.accumulate(&p_err, dt, gains.integrator_limit);
    // force opposing the weight, inertial frame is z-up
    let lift = Vec3::new(0.0, 0.0, params.mass * params.gravity);
    let inertial = p_err * gains.kp_pos
        + v_err * gains.kd_pos
        + integrator.value * gains.ki_pos
        + lift
        + sp.acceleration * params.mass;
    body_to_inertial(&est.attitude).transpose() * inertial
}

/// Body-rate command from the attitude error.
///
/// The error `q_des ⊗ q̂*` is expressed in the reference frame; its vector
/// part is rotated into body axes before being used as a rate command. The
/// sign of its scalar part selects the short way round.
pub fn attitude_control(desired: &UnitQuat, estimate: &UnitQuat, k_att: f64) -> Vec3 {
    let err = desired.multiply(&estimate.conjugate());
    let sign = if err.w() >= 0.0 { 1.0 } else { -1.0 };
    let body_err = estimate.to_rotation().transpose() * err.vector();
    body_err * (k_att * sign)
}

/// Desired moment: P on the rate error, compensation of the moment the
/// desired force produces about an offset center of mass, and the
/// gyroscopic term.
pub fn rate_control(
    rates_des: &Vec3,
    rates: &Vec3,
    force_des: &Vec3,
    params: &VehicleParams,
    k_rate: f64,
) -> Vec3 {
    (rates_des - rates) * k_rate - params.com_offset.cross(force_des)
        + rates.cross(&(params.inertia * rates))
}

pub fn controller_step(
    sp: &Setpoint,
    est: &StateEstimate,
    integrator: &mut PositionIntegrator,
    gains: &ControllerGains,
    params: &VehicleParams,
    dt: f64,
) -> Wrench {
    let force = position_control(sp, est, integrator, gains, params, dt);
    let rates_des = attitude_control(&sp.attitude, &est.attitude, gains.k_att);
    let moment = rate_control(&rates_des, &est.rates, &force, params, gains.k_rate);
    Wrench::new(force, moment)
}
