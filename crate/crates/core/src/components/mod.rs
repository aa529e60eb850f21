//! Quasi-static component models. Every evaluation is a pure function of its
//! arguments and reports infeasibility as a value.

mod battery;
mod emachine;
mod engine;
mod transmission;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use battery::{
    battery_from_current_factor, battery_from_power, BatteryConfig, BatteryPack, BatteryStep, MonotoneSpline,
};
pub use emachine::{em_power, generator_evaluate, EMachine, Generator};
pub use engine::{engine_evaluate, Engine, EngineRates};
pub use transmission::{sgn, transmission_input, TorqueCoupling, Transmission};

/// Why an operating point cannot be realised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum Infeasible {
    #[error("engine speed below idle")]
    EngineUnderspeed,
    #[error("engine speed above maximum")]
    EngineOverspeed,
    #[error("engine torque above full-load curve")]
    EngineTorque,
    #[error("electric machine speed above maximum")]
    MachineOverspeed,
    #[error("electric machine torque outside envelope")]
    MachineTorque,
    #[error("generator asked for power at zero speed")]
    GeneratorStalled,
    #[error("battery power beyond the deliverable maximum")]
    BatteryVoltageLimited,
    #[error("battery current limit exceeded")]
    BatteryCurrentLimit,
    #[error("state of charge leaves its window")]
    SocWindow,
    #[error("engine off but the bus is not balanced by the battery")]
    EngineOffMismatch,
    #[error("control value out of range")]
    ControlOutOfRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// rad/s
    pub speed: f64,
    /// N·m
    pub torque: f64,
}

impl OperatingPoint {
    pub fn new(speed: f64, torque: f64) -> Self {
        Self { speed, torque }
    }
}

/// Outcome of one feasible powertrain step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepResult {
    /// kg/s
    pub fuel_rate: f64,
    /// kg/s
    pub nox_rate: f64,
    /// kg/s
    pub hc_rate: f64,
    /// Battery terminal power, W; positive when discharging.
    pub battery_power: f64,
    /// A; positive when discharging.
    pub battery_current: f64,
    /// Transmission input (demand) point.
    pub demand: OperatingPoint,
    /// `None` while the engine is off.
    pub engine: Option<OperatingPoint>,
    /// Parallel e-machine or series propulsion motor.
    pub machine: Option<OperatingPoint>,
    pub generator: Option<OperatingPoint>,
    /// Electrical load on the DC bus (machine plus auxiliaries), W.
    pub bus_load: f64,
    /// Generator electrical output, W.
    pub generator_power: f64,
    pub soc_next: f64,
}

impl StepResult {
    pub fn engine_on(&self) -> bool {
        self.engine.is_some()
    }
}

pub type StepOutcome = Result<StepResult, Infeasible>;
