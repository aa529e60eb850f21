use super::StepInput;
use crate::components::{
    engine_evaluate, transmission_input, Engine, OperatingPoint, StepOutcome, StepResult, Transmission,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ConventionalPlant {
    pub transmission: Transmission,
    pub engine: Engine,
}

/// The engine turns with the gearbox input and supplies its torque directly.
/// There is no battery; `soc_next` is left at zero.
pub fn conventional_step(input: &StepInput, plant: &ConventionalPlant) -> StepOutcome {
    let (omega, torque) =
        transmission_input(input.omega_prop, input.torque_prop, input.omega_dot_prop, &plant.transmission);
    let rates = engine_evaluate(omega, torque, &plant.engine)?;
    let point = OperatingPoint::new(omega, torque);
    Ok(StepResult {
        fuel_rate: rates.fuel,
        nox_rate: rates.nox,
        hc_rate: rates.hc,
        demand: point,
        engine: Some(point),
        ..StepResult::default()
    })
}
