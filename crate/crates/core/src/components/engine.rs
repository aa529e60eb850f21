use serde::{Deserialize, Serialize};

use super::Infeasible;
use crate::maps::EngineMapSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Engine {
    pub maps: EngineMapSet,
    /// kg·m²
    pub inertia: f64,
}

impl Engine {
    pub fn new(maps: EngineMapSet, inertia: f64) -> Self {
        Self { maps, inertia }
    }
}

/// Fuel and pollutant mass flows, kg/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EngineRates {
    pub fuel: f64,
    pub nox: f64,
    pub hc: f64,
}

/// Looks up the engine's mass flows at a speed/torque point.
///
/// Negative torque is treated as motoring: the engine is dragged along and
/// burns what it would at zero brake torque.
#[inline]
pub fn engine_evaluate(omega: f64, torque: f64, eng: &Engine) -> Result<EngineRates, Infeasible> {
    let m = &eng.maps;
    if omega < m.omega_idle {
        return Err(Infeasible::EngineUnderspeed);
    }
    if omega > m.omega_max {
        return Err(Infeasible::EngineOverspeed);
    }
    if torque > m.torque_max.eval(omega) {
        return Err(Infeasible::EngineTorque);
    }
    let t = torque.max(0.0);
    Ok(EngineRates {
        fuel: m.fuel.interp_clamped(omega, t),
        nox: m.nox.interp_clamped(omega, t),
        hc: m.hc.interp_clamped(omega, t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{generate_engine_maps, EngineSpec, DIESEL_LHV};

    fn engine() -> (EngineSpec, Engine) {
        let spec = EngineSpec::reference();
        let maps = generate_engine_maps(&spec).unwrap();
        (spec, Engine::new(maps, 2.0))
    }

    #[test]
    fn idle_point_burns_fuel() {
        let (_, e) = engine();
        let r = engine_evaluate(e.maps.omega_idle, 0.0, &e).unwrap();
        assert!(r.fuel > 0.0);
        assert!(r.nox >= 0.0 && r.hc >= 0.0);
    }

    #[test]
    fn torque_above_full_load() {
        let (_, e) = engine();
        let w = 150.0;
        let tmax = e.maps.torque_max.eval(w);
        assert_eq!(engine_evaluate(w, 1.05 * tmax, &e), Err(Infeasible::EngineTorque));
        assert!(engine_evaluate(w, tmax, &e).is_ok());
    }

    #[test]
    fn speed_window() {
        let (_, e) = engine();
        let lo = e.maps.omega_idle;
        let hi = e.maps.omega_max;
        assert_eq!(engine_evaluate(lo - 1.0, 0.0, &e), Err(Infeasible::EngineUnderspeed));
        assert_eq!(engine_evaluate(hi + 1.0, 0.0, &e), Err(Infeasible::EngineOverspeed));
        assert!(engine_evaluate(hi, 0.0, &e).is_ok());
    }

    #[test]
    fn motoring_uses_zero_torque_row() {
        let (_, e) = engine();
        let a = engine_evaluate(120.0, -300.0, &e).unwrap();
        let b = engine_evaluate(120.0, 0.0, &e).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rated_fuel_from_brake_efficiency() {
        let (spec, e) = engine();
        let w = spec.omega_rated;
        let t = e.maps.torque_max.eval(w);
        let r = engine_evaluate(w, t, &e).unwrap();
        let expected = t * w / (spec.brake_efficiency(w, t) * DIESEL_LHV);
        assert!((r.fuel - expected).abs() <= 0.01 * expected, "{} vs {expected}", r.fuel);
    }
}
