//! First-order rotor speed and tilt dynamics.

use crate::vehicle::{VehicleParams, ROTOR_COUNT};
use std::f64::consts::PI;

/// Cable winding limit of a tilt unit: two full turns either way.
pub const WINDING_LIMIT: f64 = 4.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuatorState {
    /// rad/s, never negative.
    pub speeds: [f64; ROTOR_COUNT],
    /// rad, unwrapped.
    pub tilts: [f64; ROTOR_COUNT],
}

impl ActuatorState {
    pub fn uniform(speed: f64, tilt: f64) -> Self {
        Self {
            speeds: [speed; ROTOR_COUNT],
            tilts: [tilt; ROTOR_COUNT],
        }
    }
}

/// Outcome of one tilt update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltStep {
    pub angle: f64,
    /// The update would have crossed the winding limit; the angle is held
    /// at the limit instead.
    pub winding_fault: bool,
}

/// Exact zero-order-hold discretization of `ṅ = (n_des − n)/τ`, clamped to
/// the admissible speed range.
pub fn step_rotor(n: f64, n_des: f64, tau: f64, dt: f64, n_min: f64, n_max: f64) -> f64 {
    let decay = (-dt / tau).exp();
    (n_des + (n - n_des) * decay).clamp(n_min, n_max)
}

/// First-order tilt tracking with the angular rate limited to `rate_max`.
pub fn step_tilt(alpha: f64, alpha_des: f64, tau: f64, rate_max: f64, dt: f64) -> TiltStep {
    let max_step = rate_max * dt;
    let delta = ((alpha_des - alpha) * -(-dt / tau).exp_m1()).clamp(-max_step, max_step);
    let mut next = alpha + delta;
    // rounding of the sum may exceed the step bound by an ulp
    while (next - alpha).abs() > max_step {
        next = if next > alpha {
            next.next_down()
        } else {
            next.next_up()
        };
    }
    if next.abs() > WINDING_LIMIT {
        TiltStep {
            angle: WINDING_LIMIT.copysign(next),
            winding_fault: true,
        }
    } else {
        TiltStep {
            angle: next,
            winding_fault: false,
        }
    }
}

/// Advances all actuators one step toward the command. Returns the indices
/// of tilt units that hit the winding limit.
pub fn step_actuators(
    state: &mut ActuatorState,
    speeds_des: &[f64; ROTOR_COUNT],
    tilts_des: &[f64; ROTOR_COUNT],
    params: &VehicleParams,
    dt: f64,
) -> Vec<usize> {
    let mut faults = Vec::new();
    for i in 0..ROTOR_COUNT {
        state.speeds[i] = step_rotor(
            state.speeds[i],
            speeds_des[i],
            params.motor_time_constant,
            dt,
            params.n_min,
            params.n_max,
        );
        let tilt = step_tilt(
            state.tilts[i],
            tilts_des[i],
            params.tilt_time_constant,
            params.tilt_rate_max,
            dt,
        );
        state.tilts[i] = tilt.angle;
        if tilt.winding_fault {
            faults.push(i);
        }
    }
    faults
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TAU_N: f64 = 0.05;
    const TAU_A: f64 = 0.15;
    const RATE: f64 = 7.85;

    #[test]
    fn rotor_at_target_stays() {
        assert_eq!(step_rotor(600.0, 600.0, TAU_N, 1e-3, 0.0, 1100.0), 600.0);
    }

    #[test]
    fn rotor_step_response_at_time_constant() {
        let target = 800.0;
        let dt = 1e-3;
        let mut n = 0.0;
        for _ in 0..50 {
            n = step_rotor(n, target, TAU_N, dt, 0.0, 1100.0);
        }
        let expected = (1.0 - (-1.0f64).exp()) * target;
        assert!((n - expected).abs() < 1e-9, "{n} vs {expected}");
    }

    #[test]
    fn rotor_semigroup() {
        let one = step_rotor(100.0, 900.0, TAU_N, 0.004, 0.0, 1100.0);
        let half = step_rotor(100.0, 900.0, TAU_N, 0.002, 0.0, 1100.0);
        let two = step_rotor(half, 900.0, TAU_N, 0.002, 0.0, 1100.0);
        assert!((one - two).abs() < 1e-12 * 900.0);
    }

    #[test]
    fn rotor_clamped_to_range() {
        assert_eq!(step_rotor(1000.0, 5000.0, TAU_N, 1.0, 0.0, 1100.0), 1100.0);
        assert_eq!(step_rotor(50.0, 0.0, TAU_N, 1.0, 80.0, 1100.0), 80.0);
    }

    #[test]
    fn tilt_at_target_stays() {
        let s = step_tilt(1.2, 1.2, TAU_A, RATE, 1e-3);
        assert_eq!(s.angle, 1.2);
        assert!(!s.winding_fault);
    }

    #[test]
    fn large_tilt_step_runs_at_rate_limit() {
        let dt = 1e-3;
        let mut a = 0.0;
        for _ in 0..100 {
            let next = step_tilt(a, 3.0, TAU_A, RATE, dt).angle;
            assert!(((next - a) / dt - RATE).abs() < 1e-9);
            a = next;
        }
    }

    #[test]
    fn small_tilt_step_is_linear_first_order() {
        let dt = 1e-3;
        let target = 0.05;
        let mut a = 0.0;
        for k in 1..=300 {
            a = step_tilt(a, target, TAU_A, RATE, dt).angle;
            let exact = target * (1.0 - (-(k as f64) * dt / TAU_A).exp());
            assert!((a - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn winding_limit_holds_and_faults() {
        let s = step_tilt(WINDING_LIMIT - 1e-4, 20.0, TAU_A, RATE, 1e-3);
        assert!(s.winding_fault);
        assert_eq!(s.angle, WINDING_LIMIT);
        let s = step_tilt(-WINDING_LIMIT + 1e-4, -20.0, TAU_A, RATE, 1e-3);
        assert_eq!(s.angle, -WINDING_LIMIT);
    }

    proptest! {
        #[test]
        fn rotor_is_monotone_and_bounded(n in 0.0f64..1100.0, des in 0.0f64..1100.0, dt in 1e-4f64..0.1) {
            let next = step_rotor(n, des, TAU_N, dt, 0.0, 1100.0);
            prop_assert!((0.0..=1100.0).contains(&next));
            let (lo, hi) = if n < des { (n, des) } else { (des, n) };
            prop_assert!(next >= lo && next <= hi);
        }

        #[test]
        fn tilt_rate_never_exceeds_limit(a in -12.0f64..12.0, des in -12.0f64..12.0, dt in 1e-4f64..0.01) {
            let next = step_tilt(a, des, TAU_A, RATE, dt).angle;
            prop_assert!((next - a).abs() / dt <= RATE + 1e-12);
            let (lo, hi) = if a < des { (a, des) } else { (des, a) };
            prop_assert!(next >= lo && next <= hi);
        }
    }
}
