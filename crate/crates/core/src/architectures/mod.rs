//! Powertrain architectures built from the component models: per-interval
//! evaluators for the conventional, parallel-hybrid and series-hybrid plants.

mod config;
mod conventional;
mod parallel;
mod ratio;
mod series;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::mission::MissionProfile;

pub use config::{EngineConfig, MachineConfig, PlantConfig, TransmissionConfig};
pub use conventional::{conventional_step, ConventionalPlant};
pub use parallel::{
    parallel_drive, parallel_step, parallel_step_with_drive, parallel_torque_residual, ParallelDrive,
    ParallelPlant, ALPHA_RANGE,
};
pub use ratio::{optimize_transmission_ratio, RatioSweep};
pub use series::{
    genset_evaluate, series_demand, series_power_residual, series_step, series_step_electric,
    series_step_with_demand, GensetPoint, SeriesDemand, SeriesPlant,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Conventional,
    Parallel,
    Series,
}

impl Architecture {
    pub const ALL: [Architecture; 3] =
        [Architecture::Conventional, Architecture::Parallel, Architecture::Series];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Conventional => "conventional",
            Architecture::Parallel => "parallel",
            Architecture::Series => "series",
        }
    }

    pub fn is_hybrid(self) -> bool {
        self != Architecture::Conventional
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "conventional" => Ok(Architecture::Conventional),
            "parallel" => Ok(Architecture::Parallel),
            "series" => Ok(Architecture::Series),
            other => Err(Error::InvalidArgument(format!("unknown architecture '{other}'"))),
        }
    }
}

/// Propeller demand over one interval.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepInput {
    /// rad/s
    pub omega_prop: f64,
    /// N·m
    pub torque_prop: f64,
    /// rad/s²
    pub omega_dot_prop: f64,
}

impl StepInput {
    pub fn new(omega_prop: f64, torque_prop: f64, omega_dot_prop: f64) -> Self {
        Self { omega_prop, torque_prop, omega_dot_prop }
    }

    pub fn from_mission(mission: &MissionProfile, k: usize) -> Self {
        let s = mission.samples()[k];
        Self::new(s.omega_prop, s.torque_prop, mission.acceleration(k))
    }
}

/// One input per mission sample; sample `k` drives the interval that starts at it.
pub fn step_inputs(mission: &MissionProfile) -> Vec<StepInput> {
    (0..mission.len()).map(|k| StepInput::from_mission(mission, k)).collect()
}

/// A fully built plant of any architecture.
#[derive(Debug, Clone, PartialEq)]
pub enum Plant {
    Conventional(ConventionalPlant),
    Parallel(ParallelPlant),
    Series(SeriesPlant),
}

impl Plant {
    pub fn architecture(&self) -> Architecture {
        match self {
            Plant::Conventional(_) => Architecture::Conventional,
            Plant::Parallel(_) => Architecture::Parallel,
            Plant::Series(_) => Architecture::Series,
        }
    }
}
