use super::StepInput;
use crate::components::{
    battery_from_power, em_power, engine_evaluate, transmission_input, BatteryPack, EMachine, Engine,
    EngineRates, Infeasible, OperatingPoint, StepOutcome, StepResult, TorqueCoupling, Transmission,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ParallelPlant {
    pub transmission: Transmission,
    pub coupling: TorqueCoupling,
    pub engine: Engine,
    pub emachine: EMachine,
    pub battery: BatteryPack,
    /// Constant auxiliary load on the DC bus, W.
    pub aux_power: f64,
}

/// Mechanical side of a parallel step, independent of the battery state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParallelDrive {
    pub demand: OperatingPoint,
    pub engine: OperatingPoint,
    pub machine: OperatingPoint,
    pub rates: EngineRates,
    /// Electrical load on the battery (machine plus auxiliaries), W.
    pub bus_load: f64,
}

/// Admissible range of the torque-split coefficient. Values below zero load
/// the engine beyond the demand so the e-machine can recharge the battery.
pub const ALPHA_RANGE: (f64, f64) = (-3.0, 1.0);

/// Splits the gearbox input torque: the e-machine takes the share `alpha`
/// through the coupling, the engine the rest. Negative `alpha` charges the
/// battery from the engine. A negative engine share means the engine is
/// dragged along, burning its zero-torque fuel.
#[inline]
pub fn parallel_drive(
    input: &StepInput,
    alpha: f64,
    plant: &ParallelPlant,
) -> Result<ParallelDrive, Infeasible> {
    if !(ALPHA_RANGE.0..=ALPHA_RANGE.1).contains(&alpha) {
        return Err(Infeasible::ControlOutOfRange);
    }
    let tr = &plant.transmission;
    let (omega, torque) = transmission_input(input.omega_prop, input.torque_prop, input.omega_dot_prop, tr);
    let omega_dot = input.omega_dot_prop * tr.ratio;
    let tc = plant.coupling.ratio;

    let omega_em = omega * tc;
    let torque_em = alpha * torque / tc + plant.emachine.inertia * omega_dot * tc;
    let torque_eng = (1.0 - alpha) * torque + plant.engine.inertia * omega_dot;

    let rates = engine_evaluate(omega, torque_eng, &plant.engine)?;
    let p_em = em_power(omega_em, torque_em, &plant.emachine)?;
    Ok(ParallelDrive {
        demand: OperatingPoint::new(omega, torque),
        engine: OperatingPoint::new(omega, torque_eng),
        machine: OperatingPoint::new(omega_em, torque_em),
        rates,
        bus_load: p_em + plant.aux_power,
    })
}

pub fn parallel_step(input: &StepInput, soc: f64, alpha: f64, plant: &ParallelPlant, dt: f64) -> StepOutcome {
    let drive = parallel_drive(input, alpha, plant)?;
    parallel_step_with_drive(&drive, soc, plant, dt)
}

/// [`parallel_step`] with the mechanical side already evaluated.
#[inline]
pub fn parallel_step_with_drive(
    drive: &ParallelDrive,
    soc: f64,
    plant: &ParallelPlant,
    dt: f64,
) -> StepOutcome {
    let batt = battery_from_power(drive.bus_load, soc, &plant.battery, dt)?;
    Ok(StepResult {
        fuel_rate: drive.rates.fuel,
        nox_rate: drive.rates.nox,
        hc_rate: drive.rates.hc,
        battery_power: batt.power,
        battery_current: batt.current,
        demand: drive.demand,
        engine: Some(drive.engine),
        machine: Some(drive.machine),
        generator: None,
        bus_load: drive.bus_load,
        generator_power: 0.0,
        soc_next: batt.soc_next,
    })
}

/// Relative residual of the torque balance at the gearbox input.
pub fn parallel_torque_residual(step: &StepResult, input: &StepInput, plant: &ParallelPlant) -> f64 {
    let (Some(eng), Some(em)) = (step.engine, step.machine) else {
        return f64::INFINITY;
    };
    let omega_dot = input.omega_dot_prop * plant.transmission.ratio;
    let tc = plant.coupling.ratio;
    let lhs = eng.torque + tc * (em.torque - plant.emachine.inertia * omega_dot * tc)
        - plant.engine.inertia * omega_dot;
    let target = step.demand.torque;
    (lhs - target).abs() / target.abs().max(1.0)
}
