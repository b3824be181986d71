//! Physical parameters and rotor layout of the tilt-rotor hexacopter.
//!
//! Rotors are indexed `0..6` in code and `1..6` in logs and docs. Rotor `i`
//! sits at azimuth `i·60°` measured from body x towards body y.

use crate::spatial::{Mat3, Vec3};
use std::f64::consts::PI;
use thiserror::Error;

pub const ROTOR_COUNT: usize = 6;

/// Rotor handedness: `+1` for rotors 1, 3, 6 and `-1` for rotors 2, 4, 5.
pub const SPIN_SIGNS: [f64; ROTOR_COUNT] = [1.0, -1.0, 1.0, -1.0, -1.0, 1.0];

/// Vehicle mass, kg.
pub const DEFAULT_MASS: f64 = 3.2;
/// Maximum thrust of one rotor at full speed, N.
pub const DEFAULT_MAX_ROTOR_THRUST: f64 = 13.7;
/// Maximum tilt rate of a rotor unit, rad/s.
pub const DEFAULT_TILT_RATE_MAX: f64 = 7.85;
/// Maximum rotor speed, rad/s. Not a measured value.
pub const DEFAULT_N_MAX: f64 = 1100.0;
/// Drag torque per unit thrust, m. Not a measured value.
pub const DEFAULT_DRAG_TO_THRUST: f64 = 0.016;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{field}: {reason}")]
pub struct ParamError {
    pub field: &'static str,
    pub reason: String,
}

impl ParamError {
    fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// Body-frame inertia, kg·m².
    pub inertia: Mat3,
    /// Center-of-mass offset used by the rate controller, m.
    pub com_offset: Vec3,
    /// Lift coefficient μ, N·s².
    pub lift_coeff: f64,
    /// Drag torque coefficient κ, N·m·s².
    pub drag_coeff: f64,
    /// m
    pub arm_length: f64,
    /// Rotor speed time constant, s.
    pub motor_time_constant: f64,
    /// Tilt angle time constant, s.
    pub tilt_time_constant: f64,
    /// rad/s
    pub tilt_rate_max: f64,
    /// rad/s
    pub n_max: f64,
    /// rad/s
    pub n_min: f64,
    /// m/s²
    pub gravity: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        default_params()
    }
}

/// Parameter set for the 3.2 kg prototype. Only the mass, the per-rotor
/// thrust and the tilt rate limit are measured values; inertia, arm length,
/// rotor speed range, drag ratio and time constants are plausible defaults.
pub fn default_params() -> VehicleParams {
    let lift_coeff = DEFAULT_MAX_ROTOR_THRUST / (DEFAULT_N_MAX * DEFAULT_N_MAX);
    VehicleParams {
        mass: DEFAULT_MASS,
        inertia: Mat3::from_diagonal(&Vec3::new(0.03, 0.03, 0.05)),
        com_offset: Vec3::zeros(),
        lift_coeff,
        drag_coeff: DEFAULT_DRAG_TO_THRUST * lift_coeff,
        arm_length: 0.3,
        motor_time_constant: 0.05,
        tilt_time_constant: 0.15,
        tilt_rate_max: DEFAULT_TILT_RATE_MAX,
        n_max: DEFAULT_N_MAX,
        n_min: 0.0,
        gravity: 9.81,
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        fn positive(field: &'static str, v: f64) -> Result<(), ParamError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ParamError::new(
                    field,
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        }
        positive("params.m", self.mass)?;
        positive("params.mu", self.lift_coeff)?;
        positive("params.kappa", self.drag_coeff)?;
        positive("params.l", self.arm_length)?;
        positive("params.tau_n", self.motor_time_constant)?;
        positive("params.tau_alpha", self.tilt_time_constant)?;
        positive("params.tilt_rate_max", self.tilt_rate_max)?;
        positive("params.n_max", self.n_max)?;
        if !self.gravity.is_finite() || self.gravity < 0.0 {
            return Err(ParamError::new("params.g", "must be finite and >= 0"));
        }
        if !(self.n_min >= 0.0 && self.n_min < self.n_max) {
            return Err(ParamError::new(
                "params.n_min",
                format!("must satisfy 0 <= n_min < n_max, got {}", self.n_min),
            ));
        }
        if self.com_offset.iter().any(|v| !v.is_finite()) {
            return Err(ParamError::new("params.r_off", "must be finite"));
        }
        let j = &self.inertia;
        if j.iter().any(|v| !v.is_finite()) {
            return Err(ParamError::new("params.J", "must be finite"));
        }
        if (j - j.transpose()).abs().max() > 1e-12 {
            return Err(ParamError::new("params.J", "must be symmetric"));
        }
        if j.cholesky().is_none() {
            return Err(ParamError::new("params.J", "must be positive definite"));
        }
        Ok(())
    }

    /// Rotor speed at which six untilted rotors carry the vehicle weight.
    pub fn hover_speed(&self) -> f64 {
        (self.mass * self.gravity / (ROTOR_COUNT as f64 * self.lift_coeff)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotor {
    /// rad
    pub azimuth: f64,
    /// Body-frame position of the rotor hub, m.
    pub position: Vec3,
    /// Unit tilt axis, along the arm and pointing outward.
    pub tilt_axis: Vec3,
    pub spin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotorGeometry {
    pub rotors: [Rotor; ROTOR_COUNT],
}

impl RotorGeometry {
    pub fn rotor(&self, i: usize) -> &Rotor {
        &self.rotors[i]
    }

    /// Index of the rotor on the opposite end of the same arm line.
    pub fn opposite(i: usize) -> usize {
        (i + ROTOR_COUNT / 2) % ROTOR_COUNT
    }
}

pub fn rotor_geometry(params: &VehicleParams) -> RotorGeometry {
    let rotors = std::array::from_fn(|i| {
        let azimuth = i as f64 * PI / 3.0;
        let (s, c) = azimuth.sin_cos();
        let tilt_axis = Vec3::new(c, s, 0.0);
        Rotor {
            azimuth,
            position: tilt_axis * params.arm_length,
            tilt_axis,
            spin: SPIN_SIGNS[i],
        }
    });
    RotorGeometry { rotors }
}
