use super::StepInput;
use crate::components::{
    battery_from_current_factor, battery_from_power, em_power, engine_evaluate, generator_evaluate,
    transmission_input, BatteryPack, BatteryStep, EMachine, Engine, EngineRates, Generator, Infeasible,
    OperatingPoint, StepOutcome, StepResult, TorqueCoupling, Transmission,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPlant {
    pub transmission: Transmission,
    pub motor: EMachine,
    /// Engine-to-generator speed ratio.
    pub coupling: TorqueCoupling,
    pub engine: Engine,
    pub generator: Generator,
    pub battery: BatteryPack,
    /// Constant auxiliary load on the DC bus, W.
    pub aux_power: f64,
    /// Largest bus imbalance tolerated with the engine off, W.
    pub engine_off_tolerance: f64,
}

/// Propulsion side of a series step: the motor point and the bus load it creates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesDemand {
    pub demand: OperatingPoint,
    pub motor: OperatingPoint,
    /// Motor electrical power plus auxiliaries, W.
    pub bus_load: f64,
}

#[inline]
pub fn series_demand(input: &StepInput, plant: &SeriesPlant) -> Result<SeriesDemand, Infeasible> {
    let tr = &plant.transmission;
    let (omega, torque) = transmission_input(input.omega_prop, input.torque_prop, input.omega_dot_prop, tr);
    let omega_dot = input.omega_dot_prop * tr.ratio;
    let torque_mot = torque + plant.motor.inertia * omega_dot;
    let p_mot = em_power(omega, torque_mot, &plant.motor)?;
    Ok(SeriesDemand {
        demand: OperatingPoint::new(omega, torque),
        motor: OperatingPoint::new(omega, torque_mot),
        bus_load: p_mot + plant.aux_power,
    })
}

/// Gen-set operating point delivering `p_gen` (W) at engine speed `omega_eng`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GensetPoint {
    pub engine: OperatingPoint,
    pub generator: OperatingPoint,
    pub rates: EngineRates,
}

/// Engine torque includes the generator torque reflected through the
/// coupling and the acceleration of both rotors from `omega_prev`.
#[inline]
pub fn genset_evaluate(
    p_gen: f64,
    omega_eng: f64,
    omega_prev: f64,
    plant: &SeriesPlant,
    dt: f64,
) -> Result<GensetPoint, Infeasible> {
    let tc = plant.coupling.ratio;
    let omega_gen = omega_eng * tc;
    let torque_gen = generator_evaluate(p_gen, omega_gen, &plant.generator)?;
    let omega_dot = (omega_eng - omega_prev) / dt;
    let torque_eng =
        tc * (torque_gen + plant.generator.inertia * omega_dot * tc) + plant.engine.inertia * omega_dot;
    let rates = engine_evaluate(omega_eng, torque_eng, &plant.engine)?;
    Ok(GensetPoint {
        engine: OperatingPoint::new(omega_eng, torque_eng),
        generator: OperatingPoint::new(omega_gen, torque_gen),
        rates,
    })
}

/// One series step. The battery current is commanded by `phi`; the gen-set
/// covers whatever the bus still needs. `omega_eng = 0` switches the engine
/// off, which is only allowed when the battery alone balances the bus.
pub fn series_step(
    input: &StepInput,
    soc: f64,
    omega_prev: f64,
    phi: f64,
    omega_eng: f64,
    plant: &SeriesPlant,
    dt: f64,
) -> StepOutcome {
    let d = series_demand(input, plant)?;
    series_step_with_demand(&d, soc, omega_prev, phi, omega_eng, plant, dt)
}

/// [`series_step`] with the propulsion side already evaluated.
#[inline]
pub fn series_step_with_demand(
    d: &SeriesDemand,
    soc: f64,
    omega_prev: f64,
    phi: f64,
    omega_eng: f64,
    plant: &SeriesPlant,
    dt: f64,
) -> StepOutcome {
    let batt = battery_from_current_factor(phi, soc, &plant.battery, dt)?;
    let mut out = bus_result(d, batt);
    if omega_eng == 0.0 {
        if out.generator_power.abs() > plant.engine_off_tolerance {
            return Err(Infeasible::EngineOffMismatch);
        }
        return Ok(out);
    }
    let g = genset_evaluate(out.generator_power, omega_eng, omega_prev, plant, dt)?;
    out.fuel_rate = g.rates.fuel;
    out.nox_rate = g.rates.nox;
    out.hc_rate = g.rates.hc;
    out.engine = Some(g.engine);
    out.generator = Some(g.generator);
    Ok(out)
}

/// Engine-off step with the battery current set to carry the whole bus load.
#[inline]
pub fn series_step_electric(d: &SeriesDemand, soc: f64, plant: &SeriesPlant, dt: f64) -> StepOutcome {
    let batt = battery_from_power(d.bus_load, soc, &plant.battery, dt)?;
    Ok(bus_result(d, batt))
}

fn bus_result(d: &SeriesDemand, batt: BatteryStep) -> StepResult {
    StepResult {
        battery_power: batt.power,
        battery_current: batt.current,
        demand: d.demand,
        machine: Some(d.motor),
        bus_load: d.bus_load,
        generator_power: d.bus_load - batt.power,
        soc_next: batt.soc_next,
        ..StepResult::default()
    }
}

/// Relative residual of the DC-bus power balance.
pub fn series_power_residual(step: &StepResult) -> f64 {
    let r = step.generator_power + step.battery_power - step.bus_load;
    r.abs() / step.bus_load.abs().max(1.0)
}
