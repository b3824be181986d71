//! Linear minimum-norm control allocation.
//!
//! Every rotor force is split into a vertical part `F_v = μn²·cos α` and a
//! lateral part `F_l = μn²·sin α` in its tilt plane. In those variables the
//! body wrench is a fixed linear map of the stacked forces, independent of
//! the tilt angles, so the desired wrench is allocated with one
//! pseudo-inverse product. Speeds and tilts are then read back from the
//! polar form of each force pair.

mod mask;
mod reference;

pub use mask::{arm_angle_from_vertical, select_mask, RotorMask};
pub use reference::{nls_reference_allocate, ReferenceOptions, ReferenceSolution};

use crate::actuators::{ActuatorState, WINDING_LIMIT};
use crate::spatial::Vec3;
use crate::vehicle::{RotorGeometry, VehicleParams, ROTOR_COUNT};
use crate::wrench::Wrench;
use nalgebra::{DMatrix, DVector, SVector};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Singular values below this fraction of the largest one count as zero.
pub const SINGULAR_CUTOFF: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocationError {
    #[error("static allocation matrix has rank {rank} < 6 for mask with {active} rotors")]
    RankDeficient { rank: usize, active: usize },
    #[error("invalid rotor mask: {0}")]
    InvalidMask(String),
    #[error("reference solver found no exact solution (best residual {best_residual:.3e} N)")]
    NoConvergence { best_residual: f64 },
}

/// Stacked `(F_v1, F_l1, …, F_v6, F_l6)`, N.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecomposedForces(pub SVector<f64, 12>);

impl DecomposedForces {
    pub fn vertical(&self, i: usize) -> f64 {
        self.0[2 * i]
    }

    pub fn lateral(&self, i: usize) -> f64 {
        self.0[2 * i + 1]
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Decomposition of an actuator state.
    pub fn from_state(state: &ActuatorState, lift_coeff: f64) -> Self {
        let mut v = SVector::<f64, 12>::zeros();
        for i in 0..ROTOR_COUNT {
            let (fv, fl) = decompose(state.speeds[i], state.tilts[i], lift_coeff);
            v[2 * i] = fv;
            v[2 * i + 1] = fl;
        }
        Self(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuatorCommand {
    /// rad/s
    pub speeds: [f64; ROTOR_COUNT],
    /// rad, unwrapped against the previous command.
    pub tilts: [f64; ROTOR_COUNT],
    /// Speed was clamped to `n_max`.
    pub saturated: [bool; ROTOR_COUNT],
}

impl ActuatorCommand {
    pub fn any_saturated(&self) -> bool {
        self.saturated.iter().any(|&s| s)
    }

    pub fn as_state(&self) -> ActuatorState {
        ActuatorState {
            speeds: self.speeds,
            tilts: self.tilts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub forces: DecomposedForces,
    pub command: ActuatorCommand,
}

/// Vertical and lateral force of one rotor.
pub fn decompose(speed: f64, tilt: f64, lift_coeff: f64) -> (f64, f64) {
    let thrust = lift_coeff * speed * speed;
    let (s, c) = tilt.sin_cos();
    (thrust * c, thrust * s)
}

/// `A_static` restricted to the active rotors of `mask`: a `6 × 2k` matrix
/// whose columns alternate vertical/lateral per active rotor.
///
/// A vertical force acts along body −z at the hub, a lateral force along the
/// horizontal tangent `e_z × a_i`. Drag torque is the force scaled by
/// `c_i·κ/μ`, since both act along the rotor axis.
pub fn static_allocation_matrix(
    params: &VehicleParams,
    geometry: &RotorGeometry,
    mask: &RotorMask,
) -> DMatrix<f64> {
    let ratio = params.drag_coeff / params.lift_coeff;
    let active = mask.active_indices();
    let mut a = DMatrix::zeros(6, 2 * active.len());
    for (k, &i) in active.iter().enumerate() {
        let rotor = geometry.rotor(i);
        let vertical = -Vec3::z();
        let lateral = Vec3::z().cross(&rotor.tilt_axis);
        for (j, dir) in [vertical, lateral].into_iter().enumerate() {
            let moment = rotor.position.cross(&dir) + dir * (rotor.spin * ratio);
            let col = 2 * k + j;
            a.fixed_view_mut::<3, 1>(0, col).copy_from(&dir);
            a.fixed_view_mut::<3, 1>(3, col).copy_from(&moment);
        }
    }
    a
}

/// Moore–Penrose pseudo-inverse of a full-row-rank matrix via SVD.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>, usize> {
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = SINGULAR_CUTOFF * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    if rank < a.nrows() || sigma_max == 0.0 {
        return Err(rank);
    }
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let inv_sigma = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / s));
    Ok(v_t.transpose() * inv_sigma * u.transpose())
}

/// Numerical rank with the allocator's singular-value cutoff.
pub fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let sv = a.singular_values();
    let cutoff = SINGULAR_CUTOFF * sv.max();
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Equivalent of `raw` (mod 2π) nearest to `previous`, kept inside the
/// winding range.
pub fn unwrap_tilt(raw: f64, previous: f64) -> f64 {
    let mut a = raw + TAU * ((previous - raw) / TAU).round();
    while a > WINDING_LIMIT {
        a -= TAU;
    }
    while a < -WINDING_LIMIT {
        a += TAU;
    }
    a
}

/// `‖F_dec‖² = μ²·Σ n⁴`, checked to a relative tolerance of 1e-9.
pub fn verify_norm_identity(
    forces: &DecomposedForces,
    speeds: &[f64; ROTOR_COUNT],
    lift_coeff: f64,
) -> bool {
    let lhs = forces.0.norm_squared();
    let rhs: f64 = speeds.iter().map(|n| (lift_coeff * n * n).powi(2)).sum();
    (lhs - rhs).abs() < 1e-9 * lhs.max(1.0)
}

/// Solves for the minimum-norm decomposed forces and recovers the actuator
/// command, given a precomputed pseudo-inverse for `mask`.
fn allocate_with(
    pinv: &DMatrix<f64>,
    wrench: &Wrench,
    params: &VehicleParams,
    mask: &RotorMask,
    previous_tilts: &[f64; ROTOR_COUNT],
) -> Allocation {
    let w = DVector::from_column_slice(wrench.to_vector().as_slice());
    let solution = pinv * w;

    let mut forces = SVector::<f64, 12>::zeros();
    let mut command = ActuatorCommand {
        speeds: [0.0; ROTOR_COUNT],
        tilts: *previous_tilts,
        saturated: [false; ROTOR_COUNT],
    };
    for (k, i) in mask.active_indices().into_iter().enumerate() {
        let (fv, fl) = (solution[2 * k], solution[2 * k + 1]);
        forces[2 * i] = fv;
        forces[2 * i + 1] = fl;
        let magnitude = fv.hypot(fl);
        let speed = (magnitude / params.lift_coeff).sqrt();
        if speed > params.n_max {
            command.speeds[i] = params.n_max;
            command.saturated[i] = true;
        } else {
            command.speeds[i] = speed;
        }
        // a rotor with no force keeps its tilt
        if magnitude > 0.0 {
            command.tilts[i] = unwrap_tilt(fl.atan2(fv), previous_tilts[i]);
        }
    }
    Allocation {
        forces: DecomposedForces(forces),
        command,
    }
}

/// One-shot allocation. Builds the pseudo-inverse on every call; use
/// [`Allocator`] inside loops.
pub fn allocate(
    wrench: &Wrench,
    params: &VehicleParams,
    geometry: &RotorGeometry,
    mask: &RotorMask,
    previous_tilts: &[f64; ROTOR_COUNT],
) -> Result<Allocation, AllocationError> {
    let a = static_allocation_matrix(params, geometry, mask);
    let pinv = pseudo_inverse(&a).map_err(|rank| AllocationError::RankDeficient {
        rank,
        active: mask.len(),
    })?;
    Ok(allocate_with(&pinv, wrench, params, mask, previous_tilts))
}

/// Allocator with the pseudo-inverses of all four masks precomputed.
#[derive(Debug, Clone)]
pub struct Allocator {
    params: VehicleParams,
    inverses: Vec<Result<DMatrix<f64>, AllocationError>>,
}

impl Allocator {
    pub fn new(params: &VehicleParams, geometry: &RotorGeometry) -> Self {
        let inverses = RotorMask::all()
            .iter()
            .map(|mask| {
                pseudo_inverse(&static_allocation_matrix(params, geometry, mask)).map_err(|rank| {
                    AllocationError::RankDeficient {
                        rank,
                        active: mask.len(),
                    }
                })
            })
            .collect();
        Self {
            params: params.clone(),
            inverses,
        }
    }

    pub fn allocate(
        &self,
        wrench: &Wrench,
        mask: &RotorMask,
        previous_tilts: &[f64; ROTOR_COUNT],
    ) -> Result<Allocation, AllocationError> {
        let pinv = self.inverses[mask.slot()].as_ref().map_err(Clone::clone)?;
        Ok(allocate_with(
            pinv,
            wrench,
            &self.params,
            mask,
            previous_tilts,
        ))
    }
}

/// Per-vehicle allocation memory: the last commanded tilts and mask.
#[derive(Debug, Clone)]
pub struct AllocationContext {
    allocator: Allocator,
    pub previous_tilts: [f64; ROTOR_COUNT],
    pub mask: RotorMask,
}

impl AllocationContext {
    pub fn new(
        params: &VehicleParams,
        geometry: &RotorGeometry,
        initial_tilts: [f64; ROTOR_COUNT],
    ) -> Self {
        Self {
            allocator: Allocator::new(params, geometry),
            previous_tilts: initial_tilts,
            mask: RotorMask::full(),
        }
    }

    pub fn allocate(
        &mut self,
        wrench: &Wrench,
        mask: RotorMask,
    ) -> Result<Allocation, AllocationError> {
        let out = self
            .allocator
            .allocate(wrench, &mask, &self.previous_tilts)?;
        self.previous_tilts = out.command.tilts;
        self.mask = mask;
        Ok(out)
    }
}

/// Principal value of an angle in `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}
