//! Flat `key = value` scenario files.
//!
//! ```text
//! # comments start with '#'
//! scenario = flip_y          # optional base, otherwise a 10 s hover
//! seed = 7
//! params.m = 3.4
//! params.J = 0.03, 0.03, 0.05
//! segment.0.end = 5
//! segment.0.kind = ramp
//! segment.0.axis = 0 1 0
//! segment.0.angle_deg = 45
//! ```
//!
//! Vectors accept commas and/or whitespace as separators. Any `segment.*`
//! key replaces the base trajectory's segments; a segment without a position
//! or attitude keeps the previous target, and a missing start continues
//! from the previous end.

use super::trajectory::{AxisAngle, Segment, SegmentKind};
use super::{builtin_scenario, ConfigError, ScenarioConfig};
use crate::spatial::{Mat3, Vec3};
use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Entry<'_> {
    fn err(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::new(Some(self.line), self.key, message)
    }

    fn f64(&self) -> Result<f64, ConfigError> {
        let v: f64 = self
            .value
            .parse()
            .map_err(|_| self.err(format!("expected a number, got '{}'", self.value)))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err("must be finite"))
        }
    }

    fn floats(&self) -> Result<Vec<f64>, ConfigError> {
        self.value
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| self.err(format!("expected a finite number, got '{s}'")))
            })
            .collect()
    }

    fn vec3(&self) -> Result<Vec3, ConfigError> {
        match self.floats()?.as_slice() {
            &[x, y, z] => Ok(Vec3::new(x, y, z)),
            other => Err(self.err(format!("expected 3 numbers, got {}", other.len()))),
        }
    }

    fn inertia(&self) -> Result<Mat3, ConfigError> {
        let v = self.floats()?;
        match v.len() {
            3 => Ok(Mat3::from_diagonal(&Vec3::new(v[0], v[1], v[2]))),
            9 => Ok(Mat3::from_row_slice(&v)),
            n => Err(self.err(format!(
                "expected 3 diagonal or 9 row-major entries, got {n}"
            ))),
        }
    }

    fn u64(&self) -> Result<u64, ConfigError> {
        self.value.parse().map_err(|_| {
            self.err(format!(
                "expected a non-negative integer, got '{}'",
                self.value
            ))
        })
    }

    fn bool(&self) -> Result<bool, ConfigError> {
        match self.value {
            "true" | "1" => Ok(true),
            "false" | "0" => Ok(false),
            v => Err(self.err(format!("expected true or false, got '{v}'"))),
        }
    }

    fn text(&self) -> &str {
        let v = self.value;
        v.strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .unwrap_or(v)
    }

    fn path(&self) -> Result<PathBuf, ConfigError> {
        match self.text() {
            "" => Err(self.err("path must not be empty")),
            p => Ok(PathBuf::from(p)),
        }
    }
}

#[derive(Default)]
struct SegmentFields {
    start: Option<f64>,
    end: Option<(f64, usize)>,
    kind: Option<SegmentKind>,
    position: Option<Vec3>,
    axis: Option<Vec3>,
    angle_deg: Option<f64>,
    first_line: usize,
}

fn split_lines(text: &str) -> Result<Vec<Entry<'_>>, ConfigError> {
    let mut entries: Vec<Entry> = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::new(
                Some(line),
                content,
                "expected 'key = value'",
            ));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::new(Some(line), "", "missing key before '='"));
        }
        if let Some(first) = seen.insert(key, line) {
            return Err(ConfigError::new(
                Some(line),
                key,
                format!("duplicate key, first set on line {first}"),
            ));
        }
        entries.push(Entry {
            line,
            key,
            value: value.trim(),
        });
    }
    Ok(entries)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let entries = split_lines(text)?;
    let mut config = match entries.iter().find(|e| e.key == "scenario") {
        Some(e) => builtin_scenario(e.text()).map_err(|err| e.err(err.message))?,
        None => ScenarioConfig::default(),
    };

    let mut segments: BTreeMap<usize, SegmentFields> = BTreeMap::new();
    let mut initial_axis = None;
    let mut initial_angle = None;
    let mut duration_set = false;
    let mut lines: HashMap<String, usize> = HashMap::new();

    for e in &entries {
        lines.insert(e.key.to_string(), e.line);
        let p = &mut config.params;
        let g = &mut config.gains;
        let s = &mut config.settings;
        match e.key {
            "scenario" => {}
            "duration" => {
                config.duration = e.f64()?;
                duration_set = true;
            }
            "seed" => config.seed = e.u64()?,
            "dt_phys" => s.dt_phys = e.f64()?,
            "dt_ctrl" => s.dt_ctrl = e.f64()?,
            "params.m" => p.mass = e.f64()?,
            "params.J" => p.inertia = e.inertia()?,
            "params.r_off" => p.com_offset = e.vec3()?,
            "params.mu" => p.lift_coeff = e.f64()?,
            "params.kappa" => p.drag_coeff = e.f64()?,
            "params.l" => p.arm_length = e.f64()?,
            "params.tau_n" => p.motor_time_constant = e.f64()?,
            "params.tau_alpha" => p.tilt_time_constant = e.f64()?,
            "params.tilt_rate_max" => p.tilt_rate_max = e.f64()?,
            "params.n_max" => p.n_max = e.f64()?,
            "params.n_min" => p.n_min = e.f64()?,
            "params.g" => p.gravity = e.f64()?,
            "gains.kp_pos" => g.kp_pos = e.f64()?,
            "gains.kd_pos" => g.kd_pos = e.f64()?,
            "gains.ki_pos" => g.ki_pos = e.f64()?,
            "gains.k_att" => g.k_att = e.f64()?,
            "gains.k_rate" => g.k_rate = e.f64()?,
            "gains.integrator_limit" => g.integrator_limit = e.f64()?,
            "allocation.mask_threshold_deg" => s.mask_threshold = e.f64()?.to_radians(),
            "sim.instant_actuators" => s.instant_actuators = e.bool()?,
            "disturbance.force_sigma" => s.disturbance.force_sigma = e.f64()?,
            "disturbance.torque_sigma" => s.disturbance.torque_sigma = e.f64()?,
            "disturbance.force_bias" => s.disturbance.force_bias = e.vec3()?,
            "disturbance.torque_bias" => s.disturbance.torque_bias = e.vec3()?,
            "initial.position" => config.trajectory.start_position = e.vec3()?,
            "initial.axis" => initial_axis = Some(e.vec3()?),
            "initial.angle_deg" => initial_angle = Some(e.f64()?),
            "output.csv" => config.csv_path = Some(e.path()?),
            "output.metrics" => config.metrics_path = Some(e.path()?),
            key => match key.strip_prefix("segment.") {
                Some(rest) => parse_segment_key(e, rest, &mut segments)?,
                None => return Err(e.err("unknown key")),
            },
        }
    }

    if initial_axis.is_some() || initial_angle.is_some() {
        let base = config.trajectory.start_attitude;
        config.trajectory.start_attitude = AxisAngle::new(
            initial_axis.unwrap_or(base.axis),
            initial_angle.map_or(base.angle, f64::to_radians),
        );
    }

    let indices: Vec<usize> = segments.keys().copied().collect();
    if !segments.is_empty() {
        config.trajectory.segments = build_segments(&config, segments)?;
        if !duration_set {
            config.duration = config.trajectory.end_time();
        }
    }

    config.validate().map_err(|mut err| {
        err.line = line_for(&err.key, &lines, &indices);
        err
    })?;
    Ok(config)
}

fn line_for(key: &str, lines: &HashMap<String, usize>, indices: &[usize]) -> Option<usize> {
    if let Some(&line) = lines.get(key) {
        return Some(line);
    }
    // trajectory errors name the segment by position; map back to its key
    let pos: usize = key.strip_prefix("segment.")?.parse().ok()?;
    let k = indices.get(pos)?;
    let prefix = format!("segment.{k}.");
    lines
        .iter()
        .filter(|(name, _)| name.starts_with(&prefix))
        .map(|(_, &line)| line)
        .min()
}

fn parse_segment_key(
    e: &Entry,
    rest: &str,
    segments: &mut BTreeMap<usize, SegmentFields>,
) -> Result<(), ConfigError> {
    let (index, field) = rest
        .split_once('.')
        .ok_or_else(|| e.err("expected segment.<index>.<field>"))?;
    let index: usize = index.parse().map_err(|_| {
        e.err(format!(
            "segment index '{index}' is not a non-negative integer"
        ))
    })?;
    let fields = segments.entry(index).or_insert_with(|| SegmentFields {
        first_line: e.line,
        ..Default::default()
    });
    fields.first_line = fields.first_line.min(e.line);
    match field {
        "start" => fields.start = Some(e.f64()?),
        "end" => fields.end = Some((e.f64()?, e.line)),
        "kind" => {
            fields.kind = Some(match e.text() {
                "hold" => SegmentKind::Hold,
                "ramp" => SegmentKind::Ramp,
                other => return Err(e.err(format!("expected hold or ramp, got '{other}'"))),
            })
        }
        "position" => fields.position = Some(e.vec3()?),
        "axis" => fields.axis = Some(e.vec3()?),
        "angle_deg" => fields.angle_deg = Some(e.f64()?),
        _ => return Err(e.err("unknown key")),
    }
    Ok(())
}

fn build_segments(
    config: &ScenarioConfig,
    fields_by_index: BTreeMap<usize, SegmentFields>,
) -> Result<Vec<Segment>, ConfigError> {
    let mut out = Vec::with_capacity(fields_by_index.len());
    let mut time = 0.0;
    let mut position = config.trajectory.start_position;
    let mut attitude = config.trajectory.start_attitude;
    for (index, fields) in fields_by_index {
        let Some((end, _)) = fields.end else {
            return Err(ConfigError::new(
                Some(fields.first_line),
                format!("segment.{index}.end"),
                "missing",
            ));
        };
        position = fields.position.unwrap_or(position);
        if fields.axis.is_some() || fields.angle_deg.is_some() {
            attitude = AxisAngle::new(
                fields.axis.unwrap_or(attitude.axis),
                fields.angle_deg.map_or(attitude.angle, f64::to_radians),
            );
        }
        let segment = Segment {
            start: fields.start.unwrap_or(time),
            end,
            kind: fields.kind.unwrap_or(SegmentKind::Hold),
            position,
            attitude,
        };
        time = segment.end;
        out.push(segment);
    }
    Ok(out)
}

pub fn parse_config_file(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ConfigError::new(
            None,
            path.display().to_string(),
            format!("cannot read: {e}"),
        )
    })?;
    let mut config = parse_config(&text)?;
    if !text.lines().any(|l| {
        l.split('#')
            .next()
            .unwrap_or("")
            .trim()
            .starts_with("scenario")
    }) {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            config.name = stem.to_string();
        }
    }
    Ok(config)
}
