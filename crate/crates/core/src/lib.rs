//! Simulation and control of a hexacopter whose six rotors can each tilt
//! about their arm.
//!
//! The crate is layered bottom-up: [`spatial`] math, the [`vehicle`]
//! description, the [`wrench`] produced by a rotor configuration, linear
//! [`allocation`] of a desired wrench to rotor speeds and tilts, cascaded
//! [`control`], first-order [`actuators`], rigid-body dynamics in [`sim`],
//! and the [`scenario`] runner behind the `omnisim` binary.

pub mod actuators;
pub mod allocation;
pub mod control;
pub mod scenario;
pub mod sim;
pub mod spatial;
pub mod vehicle;
pub mod wrench;

pub use allocation::{allocate, AllocationContext, AllocationError, Allocator, RotorMask};
pub use control::{ControllerGains, Setpoint, StateEstimate};
pub use scenario::{builtin_scenario, parse_config, run, ScenarioConfig};
pub use sim::{simulate_step, LogRecord, SimError, SimSettings, SimState};
pub use spatial::{UnitQuat, Vec3};
pub use vehicle::{default_params, rotor_geometry, VehicleParams};
pub use wrench::Wrench;
