//! Built-in maneuvers.

use super::trajectory::{AxisAngle, Segment, SegmentKind, Trajectory};
use super::{ConfigError, ScenarioConfig};
use crate::sim::Disturbance;
use crate::spatial::Vec3;

pub const BUILTIN_NAMES: [&str; 4] = ["hover", "flip_y", "tilted_translation", "roll90_hover"];

struct Builder {
    segments: Vec<Segment>,
    time: f64,
    position: Vec3,
    attitude: AxisAngle,
}

impl Builder {
    fn new() -> Self {
        Self {
            segments: Vec::new(),
            time: 0.0,
            position: Vec3::zeros(),
            attitude: AxisAngle::default(),
        }
    }

    fn push(mut self, kind: SegmentKind, duration: f64) -> Self {
        self.segments.push(Segment {
            start: self.time,
            end: self.time + duration,
            kind,
            position: self.position,
            attitude: self.attitude,
        });
        self.time += duration;
        self
    }

    fn hold(self, duration: f64) -> Self {
        self.push(SegmentKind::Hold, duration)
    }

    fn move_to(mut self, position: Vec3, duration: f64) -> Self {
        self.position = position;
        self.push(SegmentKind::Ramp, duration)
    }

    fn turn_to(mut self, attitude: AxisAngle, duration: f64) -> Self {
        self.attitude = attitude;
        self.push(SegmentKind::Ramp, duration)
    }

    fn finish(self, mut config: ScenarioConfig) -> ScenarioConfig {
        config.duration = self.time;
        config.trajectory = Trajectory {
            segments: self.segments,
            ..Default::default()
        };
        config
    }
}

fn named(name: &str) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        ..Default::default()
    }
}

pub fn builtin_scenario(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let config = match name {
        "hover" => Builder::new().hold(10.0).finish(named(name)),
        // slow pitch-over to inverted flight and back, then settle
        "flip_y" => Builder::new()
            .hold(2.0)
            .turn_to(AxisAngle::degrees(Vec3::y(), 180.0), 12.0)
            .hold(3.0)
            .turn_to(AxisAngle::degrees(Vec3::y(), 0.0), 12.0)
            .hold(5.0)
            .finish(named(name)),
        // plus pattern in x then y while rolled 50°
        "tilted_translation" => {
            let leg = 2.0;
            Builder::new()
                .turn_to(AxisAngle::degrees(Vec3::x(), 50.0), 3.0)
                .hold(2.0)
                .move_to(Vec3::new(1.0, 0.0, 0.0), leg)
                .move_to(Vec3::zeros(), leg)
                .move_to(Vec3::new(-1.0, 0.0, 0.0), leg)
                .move_to(Vec3::zeros(), leg)
                .move_to(Vec3::new(0.0, 1.0, 0.0), leg)
                .move_to(Vec3::zeros(), leg)
                .move_to(Vec3::new(0.0, -1.0, 0.0), leg)
                .move_to(Vec3::zeros(), leg)
                .hold(3.0)
                .finish(named(name))
        }
        // quarter turn about body y stands the 1–4 arm vertical
        "roll90_hover" => {
            let mut config = Builder::new()
                .turn_to(AxisAngle::degrees(Vec3::y(), 90.0), 4.0)
                .hold(12.0)
                .finish(named(name));
            config.settings.disturbance = Disturbance::default_noise();
            config
        }
        other => {
            return Err(ConfigError::new(
                None,
                "scenario",
                format!(
                    "unknown scenario '{other}', expected one of {}",
                    BUILTIN_NAMES.join(", ")
                ),
            ))
        }
    };
    Ok(config)
}
