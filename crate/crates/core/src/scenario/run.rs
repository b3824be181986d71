//! Closed-loop scenario runner and summary metrics.

use super::trajectory::Trajectory;
use super::ScenarioConfig;
use crate::actuators::ActuatorState;
use crate::allocation::{allocate, select_mask};
use crate::sim::{simulate_step, LogRecord, RigidBodyState, SimError, SimState};
use crate::spatial::{body_to_inertial, UnitQuat, Vec3};
use crate::vehicle::{rotor_geometry, ROTOR_COUNT};
use crate::wrench::Wrench;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricsSummary {
    pub pos_rmse_m: f64,
    pub att_rmse_rad: f64,
    /// Largest per-rotor |Δα|/Δt between consecutive log records, rad/s.
    pub max_tilt_rate: f64,
    /// Ticks with at least one saturated rotor.
    pub sat_steps: usize,
    /// Number of changes in the active rotor count.
    pub mask_switches: usize,
    pub final_pos_err_m: f64,
    pub final_att_err_rad: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<LogRecord>,
    pub metrics: MetricsSummary,
    /// Set when the run stopped early; `records` then holds the partial log.
    pub fault: Option<SimError>,
}

fn record_attitude(r: &LogRecord) -> UnitQuat {
    let [w, x, y, z] = r.attitude;
    UnitQuat::new(w, x, y, z).unwrap_or_default()
}

pub fn compute_metrics(records: &[LogRecord], trajectory: &Trajectory) -> MetricsSummary {
    let Some(last) = records.last() else {
        return MetricsSummary::default();
    };
    let errors = |r: &LogRecord| {
        let sp = trajectory.setpoint(r.time);
        (
            (r.position - sp.position).norm(),
            record_attitude(r).angle_to(&sp.attitude),
        )
    };
    let mut pos_sq = 0.0;
    let mut att_sq = 0.0;
    for r in records {
        let (ep, ea) = errors(r);
        pos_sq += ep * ep;
        att_sq += ea * ea;
    }
    let count = records.len() as f64;

    // ticks are uniform; the mean spacing avoids the cancellation error of
    // differencing large timestamps
    let dt = match records.len() {
        0 | 1 => f64::INFINITY,
        n => (last.time - records[0].time) / (n - 1) as f64,
    };
    let mut max_tilt_rate: f64 = 0.0;
    let mut mask_switches = 0;
    for pair in records.windows(2) {
        for i in 0..ROTOR_COUNT {
            max_tilt_rate = max_tilt_rate.max((pair[1].tilts[i] - pair[0].tilts[i]).abs() / dt);
        }
        if pair[1].mask_size != pair[0].mask_size {
            mask_switches += 1;
        }
    }
    let (final_pos, final_att) = errors(last);
    MetricsSummary {
        pos_rmse_m: (pos_sq / count).sqrt(),
        att_rmse_rad: (att_sq / count).sqrt(),
        max_tilt_rate,
        sat_steps: records
            .iter()
            .filter(|r| r.saturated.iter().any(|&s| s))
            .count(),
        mask_switches,
        final_pos_err_m: final_pos,
        final_att_err_rad: final_att,
    }
}

/// Initial state: at rest on the trajectory's start pose, with the actuators
/// already producing the weight-compensating wrench.
fn initial_state(config: &ScenarioConfig) -> SimState {
    let params = &config.params;
    let geometry = rotor_geometry(params);
    let attitude = config.trajectory.start_attitude.to_quat();
    let body = RigidBodyState {
        position: config.trajectory.start_position,
        attitude,
        ..Default::default()
    };
    let lift = Vec3::new(0.0, 0.0, params.mass * params.gravity);
    let hover = Wrench::new(
        body_to_inertial(&attitude).transpose() * lift,
        Vec3::zeros(),
    );
    let mask = select_mask(&attitude, &geometry, config.settings.mask_threshold);
    let actuators = allocate(&hover, params, &geometry, &mask, &[0.0; ROTOR_COUNT])
        .map(|a| a.command.as_state())
        .unwrap_or_else(|_| ActuatorState::uniform(params.hover_speed(), 0.0));
    SimState::new(params, &geometry, body, actuators, config.seed)
}

/// Number of control ticks needed to cover `duration`.
fn tick_count(duration: f64, dt_ctrl: f64) -> u64 {
    (duration / dt_ctrl - 1e-9).ceil().max(0.0) as u64
}

pub fn run(config: &ScenarioConfig) -> RunOutput {
    let geometry = rotor_geometry(&config.params);
    let mut sim = initial_state(config);
    let ticks = tick_count(config.duration, config.settings.dt_ctrl);
    let mut records = Vec::with_capacity(ticks as usize);
    let mut fault = None;
    for k in 0..ticks {
        let t = k as f64 * config.settings.dt_ctrl;
        let setpoint = config.trajectory.setpoint(t);
        match simulate_step(
            &mut sim,
            &setpoint,
            &config.gains,
            &config.params,
            &geometry,
            &config.settings,
        ) {
            Ok(record) => records.push(record),
            Err(err) => {
                log::error!("{}: {err}", config.name);
                fault = Some(err);
                break;
            }
        }
    }
    let metrics = compute_metrics(&records, &config.trajectory);
    log::info!(
        "{}: {} ticks, pos rmse {:.4} m, att rmse {:.4} rad",
        config.name,
        records.len(),
        metrics.pos_rmse_m,
        metrics.att_rmse_rad
    );
    RunOutput {
        records,
        metrics,
        fault,
    }
}
