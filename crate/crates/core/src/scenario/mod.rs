//! Scenario description, built-in maneuvers, the closed-loop runner and its
//! log and metrics outputs.

mod builtin;
mod config;
mod output;
mod run;
mod trajectory;

pub use builtin::{builtin_scenario, BUILTIN_NAMES};
pub use config::{parse_config, parse_config_file};
pub use output::{
    csv_header, format_csv, format_metrics, parse_csv, parse_metrics, write_outputs, OutputError,
    METRIC_KEYS,
};
pub use run::{compute_metrics, run, MetricsSummary, RunOutput};
pub use trajectory::{AxisAngle, Segment, SegmentKind, Trajectory};

use crate::control::ControllerGains;
use crate::sim::SimSettings;
use crate::vehicle::{default_params, VehicleParams};
use std::fmt;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    /// 1-based line in the config text, when the problem has one.
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(line: Option<usize>, key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            line,
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub params: VehicleParams,
    pub gains: ControllerGains,
    pub settings: SimSettings,
    /// s
    pub duration: f64,
    pub seed: u64,
    /// The start pose doubles as the initial state of the vehicle.
    pub trajectory: Trajectory,
    pub csv_path: Option<PathBuf>,
    pub metrics_path: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            params: default_params(),
            gains: ControllerGains::default(),
            settings: SimSettings::default(),
            duration: 10.0,
            seed: 0,
            trajectory: Trajectory::default(),
            csv_path: None,
            metrics_path: None,
        }
    }
}

impl ScenarioConfig {
    /// Checks everything except line numbers, which the parser attaches.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params
            .validate()
            .map_err(|e| ConfigError::new(None, e.field, e.reason))?;
        self.gains.validate().map_err(|msg| {
            let (key, rest) = msg.split_once(": ").unwrap_or(("gains", msg.as_str()));
            ConfigError::new(None, key, rest)
        })?;
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(ConfigError::new(
                None,
                "duration",
                format!("must be finite and > 0, got {}", self.duration),
            ));
        }
        let s = &self.settings;
        if !(s.dt_phys.is_finite() && s.dt_phys > 0.0) {
            return Err(ConfigError::new(
                None,
                "dt_phys",
                format!("must be > 0, got {}", s.dt_phys),
            ));
        }
        if !(s.dt_ctrl.is_finite() && s.dt_ctrl > 0.0) {
            return Err(ConfigError::new(
                None,
                "dt_ctrl",
                format!("must be > 0, got {}", s.dt_ctrl),
            ));
        }
        let ratio = s.dt_ctrl / s.dt_phys;
        if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(ConfigError::new(
                None,
                "dt_ctrl",
                format!(
                    "must be an integer multiple of dt_phys = {}, got {}",
                    s.dt_phys, s.dt_ctrl
                ),
            ));
        }
        if !(s.mask_threshold.is_finite() && s.mask_threshold >= 0.0) {
            return Err(ConfigError::new(
                None,
                "allocation.mask_threshold_deg",
                "must be finite and >= 0",
            ));
        }
        let d = &s.disturbance;
        if !(d.force_sigma.is_finite() && d.force_sigma >= 0.0) {
            return Err(ConfigError::new(
                None,
                "disturbance.force_sigma",
                "must be finite and >= 0",
            ));
        }
        if !(d.torque_sigma.is_finite() && d.torque_sigma >= 0.0) {
            return Err(ConfigError::new(
                None,
                "disturbance.torque_sigma",
                "must be finite and >= 0",
            ));
        }
        if self.trajectory.start_attitude.angle != 0.0
            && self.trajectory.start_attitude.axis.norm() == 0.0
        {
            return Err(ConfigError::new(
                None,
                "initial.axis",
                "rotation axis must be non-zero",
            ));
        }
        self.trajectory
            .validate()
            .map_err(|(k, msg)| ConfigError::new(None, format!("segment.{k}"), msg))
    }
}
