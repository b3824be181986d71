//! Offline nonlinear least-squares allocator, used as a test oracle.
//!
//! Works directly on rotor speeds and tilts through the geometric rotor
//! model, with a multi-start Levenberg–Marquardt search. A decaying penalty
//! on `Σ(μn²)²` steers each start towards low-thrust solutions before a final
//! pure-residual polish.

use super::{ActuatorCommand, AllocationError, DecomposedForces};
use crate::actuators::ActuatorState;
use crate::vehicle::{RotorGeometry, VehicleParams, ROTOR_COUNT};
use crate::wrench::{body_wrench, single_rotor_wrench, Wrench};
use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const N: usize = ROTOR_COUNT;
const VARS: usize = 2 * N;
const ROWS: usize = 6 + N;

type Jac = SMatrix<f64, ROWS, VARS>;
type Res = SVector<f64, ROWS>;
type Vars = SVector<f64, VARS>;

#[derive(Debug, Clone)]
pub struct ReferenceOptions {
    pub starts: usize,
    pub seed: u64,
    pub iterations_per_stage: usize,
    /// Residual norm (N and N·m) under which a solution counts as exact.
    pub exact_tolerance: f64,
    pub penalty_schedule: Vec<f64>,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            seed: 0x5eed,
            iterations_per_stage: 60,
            exact_tolerance: 1e-6,
            penalty_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8],
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub command: ActuatorCommand,
    /// Euclidean norm of the wrench residual.
    pub residual: f64,
    pub forces_norm: f64,
    /// Number of starts that ended on an exact solution.
    pub exact_solutions: usize,
}

struct Problem<'a> {
    params: &'a VehicleParams,
    geometry: &'a RotorGeometry,
    target: SVector<f64, 6>,
}

impl Problem<'_> {
    // variables: x[i] = √μ·n_i, x[N + i] = α_i, so that μn² = x[i]²
    fn state(&self, x: &Vars) -> ActuatorState {
        let scale = self.params.lift_coeff.sqrt();
        ActuatorState {
            speeds: std::array::from_fn(|i| x[i].abs() / scale),
            tilts: std::array::from_fn(|i| x[N + i]),
        }
    }

    fn wrench_residual(&self, x: &Vars) -> SVector<f64, 6> {
        body_wrench(&self.state(x), self.params, self.geometry).to_vector() - self.target
    }

    fn residual_and_jacobian(&self, x: &Vars, penalty: f64) -> (Res, Jac) {
        let mut r = Res::zeros();
        let mut j = Jac::zeros();
        r.fixed_rows_mut::<6>(0).copy_from(&self.wrench_residual(x));
        let w = penalty.sqrt();
        for i in 0..N {
            let s = x[i];
            let tilt = x[N + i];
            // wrench per unit thrust, and its derivative along the tilt axis
            let unit = single_rotor_wrench(
                self.params,
                self.geometry,
                i,
                1.0 / self.params.lift_coeff,
                tilt,
            );
            let rotor = self.geometry.rotor(i);
            let axis = rotor.tilt_axis;
            let drag = unit.moment - rotor.position.cross(&unit.force);
            let d_force = axis.cross(&unit.force);
            let d_moment = axis.cross(&drag) + rotor.position.cross(&d_force);
            let col = unit.to_vector();
            let d_col = Wrench::new(d_force, d_moment).to_vector();
            j.fixed_view_mut::<6, 1>(0, i).copy_from(&(col * (2.0 * s)));
            j.fixed_view_mut::<6, 1>(0, N + i)
                .copy_from(&(d_col * (s * s)));
            r[6 + i] = w * s * s;
            j[(6 + i, i)] = w * 2.0 * s;
        }
        (r, j)
    }

    fn solve_stage(&self, x: &mut Vars, penalty: f64, iterations: usize) {
        let mut damping = 1e-3;
        let (mut r, mut j) = self.residual_and_jacobian(x, penalty);
        let mut cost = r.norm_squared();
        for _ in 0..iterations {
            let jt = j.transpose();
            let g = jt * r;
            if g.amax() < 1e-14 {
                break;
            }
            let h = jt * j;
            let mut improved = false;
            for _ in 0..20 {
                let mut lhs = h;
                for k in 0..VARS {
                    lhs[(k, k)] += damping * (1.0 + h[(k, k)]);
                }
                let Some(step) = lhs.cholesky().map(|c| c.solve(&(-g))) else {
                    damping *= 10.0;
                    continue;
                };
                let candidate = *x + step;
                let (rc, jc) = self.residual_and_jacobian(&candidate, penalty);
                let cc = rc.norm_squared();
                if cc < cost {
                    *x = candidate;
                    r = rc;
                    j = jc;
                    cost = cc;
                    damping = (damping * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
                damping *= 10.0;
            }
            if !improved || cost < 1e-26 {
                break;
            }
        }
    }
}

/// Multi-start nonlinear least-squares allocation over speeds and tilts.
/// Returns the exact solution (residual below the tolerance) with the
/// smallest decomposed-force norm.
pub fn nls_reference_allocate(
    wrench: &Wrench,
    params: &VehicleParams,
    geometry: &RotorGeometry,
    options: &ReferenceOptions,
) -> Result<ReferenceSolution, AllocationError> {
    let problem = Problem {
        params,
        geometry,
        target: wrench.to_vector(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let hover_thrust = params.mass * params.gravity / N as f64;

    let mut best: Option<ReferenceSolution> = None;
    let mut best_residual = f64::INFINITY;
    let mut exact = 0;
    for start in 0..options.starts {
        let mut x = Vars::zeros();
        for i in 0..N {
            let thrust = if start == 0 {
                hover_thrust
            } else {
                rng.random_range(0.2..1.5) * hover_thrust
            };
            x[i] = thrust.sqrt();
            x[N + i] = if start == 0 {
                0.0
            } else {
                rng.random_range(-PI..PI)
            };
        }
        for &penalty in &options.penalty_schedule {
            problem.solve_stage(&mut x, penalty, options.iterations_per_stage);
        }
        problem.solve_stage(&mut x, 0.0, 4 * options.iterations_per_stage);

        let residual = problem.wrench_residual(&x).norm();
        best_residual = best_residual.min(residual);
        if residual >= options.exact_tolerance {
            continue;
        }
        exact += 1;
        let state = problem.state(&x);
        let forces_norm = DecomposedForces::from_state(&state, params.lift_coeff).norm();
        if best.as_ref().is_none_or(|b| forces_norm < b.forces_norm) {
            best = Some(ReferenceSolution {
                command: ActuatorCommand {
                    speeds: state.speeds,
                    tilts: state.tilts,
                    saturated: std::array::from_fn(|i| state.speeds[i] > params.n_max),
                },
                residual,
                forces_norm,
                exact_solutions: 0,
            });
        }
    }
    match best {
        Some(mut sol) => {
            sol.exact_solutions = exact;
            Ok(sol)
        }
        None => Err(AllocationError::NoConvergence { best_residual }),
    }
}
