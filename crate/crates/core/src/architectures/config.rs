use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Architecture, ConventionalPlant, ParallelPlant, Plant, SeriesPlant};
use crate::components::{
    BatteryConfig, BatteryPack, EMachine, Engine, Generator, TorqueCoupling, Transmission,
};
use crate::error::{Error, Result};
use crate::maps::{
    generate_em_map, generate_engine_maps, load_maps, scale_engine_maps, EmMapSet, EmSpec, EngineMapSet,
    EngineSpec,
};

const RPM: f64 = std::f64::consts::PI / 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionConfig {
    pub ratio: f64,
    pub efficiency: f64,
    pub inertia_kgm2: f64,
}

impl TransmissionConfig {
    pub fn build(&self) -> Result<Transmission> {
        Transmission::new(self.ratio, self.efficiency, self.inertia_kgm2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub displacement_l: f64,
    pub rated_power_kw: f64,
    pub rated_speed_rpm: f64,
    pub peak_torque_nm: f64,
    pub peak_torque_speed_rpm: f64,
    pub idle_speed_rpm: f64,
    /// Rescale the generated maps to this power, keeping the speed range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled_power_kw: Option<f64>,
    pub inertia_kgm2: f64,
    /// Use a map file instead of generating maps from the ratings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_file: Option<PathBuf>,
}

impl EngineConfig {
    pub fn spec(&self) -> EngineSpec {
        EngineSpec {
            displacement_l: self.displacement_l,
            rated_power: self.rated_power_kw * 1e3,
            omega_rated: self.rated_speed_rpm * RPM,
            torque_peak: self.peak_torque_nm,
            omega_torque_peak: self.peak_torque_speed_rpm * RPM,
            omega_idle: self.idle_speed_rpm * RPM,
        }
    }

    pub fn maps(&self) -> Result<EngineMapSet> {
        let base = match &self.map_file {
            Some(path) => load_maps(path)?.into_engine()?,
            None => generate_engine_maps(&self.spec())?,
        };
        match self.scaled_power_kw {
            Some(kw) => scale_engine_maps(&base, kw * 1e3),
            None => Ok(base),
        }
    }

    pub fn build(&self) -> Result<Engine> {
        check_inertia(self.inertia_kgm2)?;
        Ok(Engine::new(self.maps()?, self.inertia_kgm2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineConfig {
    pub rated_power_kw: f64,
    pub max_speed_rpm: f64,
    pub base_speed_rpm: f64,
    pub inertia_kgm2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_file: Option<PathBuf>,
}

impl MachineConfig {
    pub fn spec(&self) -> EmSpec {
        EmSpec::new(self.rated_power_kw * 1e3, self.max_speed_rpm * RPM, self.base_speed_rpm * RPM)
    }

    pub fn maps(&self) -> Result<EmMapSet> {
        match &self.map_file {
            Some(path) => load_maps(path)?.into_emachine(),
            None => generate_em_map(&self.spec()),
        }
    }

    pub fn build_machine(&self) -> Result<EMachine> {
        check_inertia(self.inertia_kgm2)?;
        Ok(EMachine::new(self.maps()?, self.inertia_kgm2))
    }

    pub fn build_generator(&self) -> Result<Generator> {
        check_inertia(self.inertia_kgm2)?;
        Ok(Generator::new(self.maps()?, self.inertia_kgm2))
    }
}

fn check_inertia(j: f64) -> Result<()> {
    if j.is_finite() && j >= 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("inertia must be nonnegative, got {j}")))
    }
}

fn default_off_tolerance() -> f64 {
    100.0
}

/// Plant description as stored on disk. Which blocks are required depends
/// on the architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub architecture: Architecture,
    pub transmission: TransmissionConfig,
    pub engine: EngineConfig,
    /// Parallel e-machine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emachine: Option<MachineConfig>,
    /// Series propulsion motor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motor: Option<MachineConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<MachineConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub battery: Option<BatteryConfig>,
    #[serde(default)]
    pub aux_power_kw: f64,
    #[serde(default = "default_off_tolerance")]
    pub engine_off_tolerance_w: f64,
}

impl PlantConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a config; relative map paths are resolved against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        };
        resolve(&mut cfg.engine.map_file);
        for m in [&mut cfg.emachine, &mut cfg.motor, &mut cfg.generator].into_iter().flatten() {
            resolve(&mut m.map_file);
        }
        Ok(cfg)
    }

    /// The configuration shipped with the crate for `arch`.
    pub fn bundled(arch: Architecture) -> Self {
        let text = match arch {
            Architecture::Conventional => include_str!("../../data/conventional.json"),
            Architecture::Parallel => include_str!("../../data/parallel.json"),
            Architecture::Series => include_str!("../../data/series.json"),
        };
        Self::from_json(text).expect("bundled plant config parses")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plant config serializes")
    }

    fn required<'a, T>(&self, block: &'a Option<T>, name: &str) -> Result<&'a T> {
        block
            .as_ref()
            .ok_or_else(|| Error::Validation(format!("{} plant needs a '{name}' block", self.architecture)))
    }

    fn coupling(&self) -> Result<TorqueCoupling> {
        TorqueCoupling::new(*self.required(&self.coupling_ratio, "coupling_ratio")?)
    }

    fn battery(&self) -> Result<BatteryPack> {
        BatteryPack::from_config(self.required(&self.battery, "battery")?)
    }

    fn aux_power(&self) -> Result<f64> {
        if self.aux_power_kw.is_finite() && self.aux_power_kw >= 0.0 {
            Ok(self.aux_power_kw * 1e3)
        } else {
            Err(Error::Validation("aux_power_kw must be nonnegative".into()))
        }
    }

    pub fn build(&self) -> Result<Plant> {
        let transmission = self.transmission.build()?;
        let engine = self.engine.build()?;
        Ok(match self.architecture {
            Architecture::Conventional => Plant::Conventional(ConventionalPlant { transmission, engine }),
            Architecture::Parallel => Plant::Parallel(ParallelPlant {
                transmission,
                coupling: self.coupling()?,
                engine,
                emachine: self.required(&self.emachine, "emachine")?.build_machine()?,
                battery: self.battery()?,
                aux_power: self.aux_power()?,
            }),
            Architecture::Series => {
                if !(self.engine_off_tolerance_w >= 0.0) {
                    return Err(Error::Validation("engine_off_tolerance_w must be nonnegative".into()));
                }
                Plant::Series(SeriesPlant {
                    transmission,
                    motor: self.required(&self.motor, "motor")?.build_machine()?,
                    coupling: self.coupling()?,
                    engine,
                    generator: self.required(&self.generator, "generator")?.build_generator()?,
                    battery: self.battery()?,
                    aux_power: self.aux_power()?,
                    engine_off_tolerance: self.engine_off_tolerance_w,
                })
            }
        })
    }
}
