//! Piecewise setpoint trajectories: holds and linear ramps.

use crate::control::Setpoint;
use crate::spatial::{UnitQuat, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub axis: Vec3,
    /// rad
    pub angle: f64,
}

impl Default for AxisAngle {
    fn default() -> Self {
        Self {
            axis: Vec3::z(),
            angle: 0.0,
        }
    }
}

impl AxisAngle {
    pub fn new(axis: Vec3, angle: f64) -> Self {
        Self { axis, angle }
    }

    pub fn degrees(axis: Vec3, deg: f64) -> Self {
        Self::new(axis, deg.to_radians())
    }

    pub fn to_quat(&self) -> UnitQuat {
        UnitQuat::from_axis_angle(&self.axis, self.angle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    /// Holds the segment target for the whole segment.
    Hold,
    /// Moves from the previous target to this one at constant linear and
    /// angular rate.
    Ramp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub kind: SegmentKind,
    pub position: Vec3,
    pub attitude: AxisAngle,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub start_position: Vec3,
    pub start_attitude: AxisAngle,
    pub segments: Vec<Segment>,
}

impl Trajectory {
    pub fn hold(position: Vec3) -> Self {
        Self {
            start_position: position,
            ..Default::default()
        }
    }

    /// Checks that segments start at zero, are non-empty and contiguous.
    /// On failure returns the offending segment index and a message.
    pub fn validate(&self) -> Result<(), (usize, String)> {
        let mut expected = 0.0;
        for (k, seg) in self.segments.iter().enumerate() {
            if !(seg.start.is_finite() && seg.end.is_finite()) {
                return Err((k, "start and end must be finite".into()));
            }
            if (seg.start - expected).abs() > 1e-9 {
                return Err((
                    k,
                    format!(
                        "starts at {} but the previous segment ends at {expected}",
                        seg.start
                    ),
                ));
            }
            if seg.end <= seg.start {
                return Err((
                    k,
                    format!("end {} must be after start {}", seg.end, seg.start),
                ));
            }
            if seg.attitude.angle != 0.0 && seg.attitude.axis.norm() == 0.0 {
                return Err((k, "rotation axis must be non-zero".into()));
            }
            expected = seg.end;
        }
        Ok(())
    }

    fn target_before(&self, k: usize) -> (Vec3, UnitQuat) {
        match k {
            0 => (self.start_position, self.start_attitude.to_quat()),
            _ => {
                let s = &self.segments[k - 1];
                (s.position, s.attitude.to_quat())
            }
        }
    }

    pub fn setpoint(&self, t: f64) -> Setpoint {
        let Some(k) = self.segments.iter().position(|s| t < s.end) else {
            let (p, q) = self.target_before(self.segments.len());
            return Setpoint::hold(p, q);
        };
        let seg = &self.segments[k];
        let target_q = seg.attitude.to_quat();
        match seg.kind {
            SegmentKind::Hold => Setpoint::hold(seg.position, target_q),
            SegmentKind::Ramp => {
                let (p0, q0) = self.target_before(k);
                let span = seg.end - seg.start;
                let s = ((t - seg.start) / span).clamp(0.0, 1.0);
                let delta = q0.conjugate().multiply(&target_q).to_scaled_axis();
                Setpoint {
                    position: p0 + (seg.position - p0) * s,
                    velocity: (seg.position - p0) / span,
                    acceleration: Vec3::zeros(),
                    attitude: q0.multiply(&UnitQuat::from_scaled_axis(&(delta * s))),
                }
            }
        }
    }

    pub fn end_time(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }
}
