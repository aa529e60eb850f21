use serde::{Deserialize, Serialize};

use super::Infeasible;
use crate::maps::EmMapSet;

/// An electric machine used as a motor (parallel e-machine, series motor).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EMachine {
    pub maps: EmMapSet,
    /// kg·m²
    pub inertia: f64,
}

impl EMachine {
    pub fn new(maps: EmMapSet, inertia: f64) -> Self {
        Self { maps, inertia }
    }

    fn check_envelope(&self, omega: f64, torque: f64) -> Result<(), Infeasible> {
        let m = &self.maps;
        if omega.abs() > m.omega_max {
            return Err(Infeasible::MachineOverspeed);
        }
        let w = omega.abs();
        if torque > m.torque_sup.eval(w) || torque < m.torque_inf.eval(w) {
            return Err(Infeasible::MachineTorque);
        }
        Ok(())
    }
}

/// Electrical power drawn by the machine, W; negative when generating.
#[inline]
pub fn em_power(omega: f64, torque: f64, em: &EMachine) -> Result<f64, Infeasible> {
    em.check_envelope(omega, torque)?;
    let p_mech = torque * omega;
    if p_mech == 0.0 {
        return Ok(0.0);
    }
    let eta = em.maps.efficiency.interp_clamped(omega.abs(), torque);
    Ok(if p_mech > 0.0 { p_mech / eta } else { eta * p_mech })
}

/// The gen-set generator. Its efficiency map is indexed by electrical torque.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub maps: EmMapSet,
    /// kg·m²
    pub inertia: f64,
}

impl Generator {
    pub fn new(maps: EmMapSet, inertia: f64) -> Self {
        Self { maps, inertia }
    }

    /// Generator efficiency at an electrical operating point.
    #[inline]
    pub fn efficiency(&self, omega: f64, torque_el: f64) -> f64 {
        self.maps.efficiency.interp_clamped(omega, torque_el)
    }
}

/// Mechanical input torque needed for an electrical output `p_el` at
/// generator speed `omega`, N·m. Negative `p_el` motors the gen-set.
#[inline]
pub fn generator_evaluate(p_el: f64, omega: f64, gen: &Generator) -> Result<f64, Infeasible> {
    if p_el == 0.0 {
        return Ok(0.0);
    }
    if omega <= 0.0 {
        return Err(Infeasible::GeneratorStalled);
    }
    let m = &gen.maps;
    if omega > m.omega_max {
        return Err(Infeasible::MachineOverspeed);
    }
    let eta = gen.efficiency(omega, p_el / omega);
    let torque = if p_el >= 0.0 { p_el / (eta * omega) } else { eta * p_el / omega };
    if torque > m.torque_sup.eval(omega) || torque < m.torque_inf.eval(omega) {
        return Err(Infeasible::MachineTorque);
    }
    Ok(torque)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{generate_em_map, EmSpec};
    use proptest::prelude::*;

    fn flat(eta: f64) -> EMachine {
        EMachine::new(EmMapSet::constant(eta, 1000.0, 1000.0).unwrap(), 0.0)
    }

    #[test]
    fn zero_torque_draws_nothing() {
        assert_eq!(em_power(300.0, 0.0, &flat(0.9)), Ok(0.0));
    }

    #[test]
    fn motoring_and_regeneration() {
        let m = flat(0.9);
        let p = em_power(100.0, 100.0, &m).unwrap();
        assert!((p - 10_000.0 / 0.9).abs() < 1e-9);
        assert!((p - 11_111.0).abs() < 1.0);
        let p = em_power(100.0, -100.0, &m).unwrap();
        assert!((p + 9000.0).abs() < 1e-9);
    }

    #[test]
    fn envelope_violations() {
        let m = EMachine::new(generate_em_map(&EmSpec::new(47_000.0, 950.0, 300.0)).unwrap(), 0.0);
        assert_eq!(em_power(960.0, 1.0, &m), Err(Infeasible::MachineOverspeed));
        let tsup = m.maps.torque_sup.eval(600.0);
        assert_eq!(em_power(600.0, tsup * 1.01, &m), Err(Infeasible::MachineTorque));
        assert_eq!(em_power(600.0, -tsup * 1.01, &m), Err(Infeasible::MachineTorque));
    }

    #[test]
    fn generator_branches() {
        let g = Generator::new(EmMapSet::constant(0.92, 1000.0, 1000.0).unwrap(), 0.0);
        assert_eq!(generator_evaluate(0.0, 0.0, &g), Ok(0.0));
        let t = generator_evaluate(46_000.0, 200.0, &g).unwrap();
        assert!((t - 250.0).abs() < 1e-9);
        let t = generator_evaluate(-10_000.0, 200.0, &g).unwrap();
        assert!((t + 0.92 * 50.0).abs() < 1e-9);
        assert_eq!(generator_evaluate(10_000.0, 0.0, &g), Err(Infeasible::GeneratorStalled));
        assert_eq!(generator_evaluate(2e6, 500.0, &g), Err(Infeasible::MachineTorque));
    }

    proptest! {
        #[test]
        fn power_sign_follows_mechanical_power(w in 0.0f64..314.0, frac in -1.0f64..1.0) {
            let m = EMachine::new(generate_em_map(&EmSpec::new(147_000.0, 314.0, 157.0)).unwrap(), 0.0);
            let t = frac * m.maps.torque_sup.eval(w);
            let p = em_power(w, t, &m).unwrap();
            let pm = t * w;
            prop_assert_eq!(p.partial_cmp(&0.0), pm.partial_cmp(&0.0));
            prop_assert!(p.abs() >= 0.0);
            if pm > 0.0 { prop_assert!(p >= pm); } else { prop_assert!(p.abs() <= pm.abs()); }
        }
    }
}
