//! Active-rotor masks and the vertical-arm exclusion rule.

use super::AllocationError;
use crate::spatial::{body_to_inertial, UnitQuat};
use crate::vehicle::{RotorGeometry, ROTOR_COUNT};

const ARM_LINES: usize = ROTOR_COUNT / 2;

/// Set of rotors used by the allocator: either all six, or all but one
/// opposite pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RotorMask {
    excluded_line: Option<usize>,
}

impl Default for RotorMask {
    fn default() -> Self {
        Self::full()
    }
}

impl RotorMask {
    pub fn full() -> Self {
        Self {
            excluded_line: None,
        }
    }

    /// Excludes rotor `i` and the rotor opposite to it.
    pub fn excluding_pair(i: usize) -> Self {
        assert!(i < ROTOR_COUNT, "rotor index out of range: {i}");
        Self {
            excluded_line: Some(i % ARM_LINES),
        }
    }

    pub fn from_active(active: [bool; ROTOR_COUNT]) -> Result<Self, AllocationError> {
        let off: Vec<usize> = (0..ROTOR_COUNT).filter(|&i| !active[i]).collect();
        match off.as_slice() {
            [] => Ok(Self::full()),
            [a, b] if RotorGeometry::opposite(*a) == *b => Ok(Self::excluding_pair(*a)),
            _ => Err(AllocationError::InvalidMask(format!(
                "excluded rotors must be one opposite pair, got {:?}",
                off.iter().map(|i| i + 1).collect::<Vec<_>>()
            ))),
        }
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.excluded_line != Some(i % ARM_LINES)
    }

    pub fn active(&self) -> [bool; ROTOR_COUNT] {
        std::array::from_fn(|i| self.is_active(i))
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..ROTOR_COUNT).filter(|&i| self.is_active(i)).collect()
    }

    pub fn len(&self) -> usize {
        if self.excluded_line.is_some() {
            ROTOR_COUNT - 2
        } else {
            ROTOR_COUNT
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Excluded arm line (`0..3`), if any.
    pub fn excluded_line(&self) -> Option<usize> {
        self.excluded_line
    }

    /// Dense index over the four possible masks.
    pub(crate) fn slot(&self) -> usize {
        self.excluded_line.map_or(0, |l| l + 1)
    }

    pub(crate) fn all() -> [RotorMask; ARM_LINES + 1] {
        [
            Self::full(),
            Self::excluding_pair(0),
            Self::excluding_pair(1),
            Self::excluding_pair(2),
        ]
    }
}

/// Angle between the arm line through rotor `i` and the inertial vertical.
pub fn arm_angle_from_vertical(q: &UnitQuat, geometry: &RotorGeometry, i: usize) -> f64 {
    let axis = body_to_inertial(q) * geometry.rotor(i).tilt_axis;
    axis.xy().norm().atan2(axis.z.abs())
}

/// Drops the opposite rotor pair whose arm is within `threshold` rad of
/// vertical. When several arms qualify, only the most vertical one is
/// dropped.
pub fn select_mask(q: &UnitQuat, geometry: &RotorGeometry, threshold: f64) -> RotorMask {
    (0..ARM_LINES)
        .map(|line| (line, arm_angle_from_vertical(q, geometry, line)))
        .filter(|&(_, angle)| angle <= threshold)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map_or_else(RotorMask::full, |(line, _)| RotorMask::excluding_pair(line))
}
