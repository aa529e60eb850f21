use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::components::StepResult;
use crate::error::{Error, Result};
use crate::maps::EngineMapSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    /// Weighted NOx/HC trade-off.
    Emissions,
    /// Fuel mass only.
    Fuel,
}

impl CostKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CostKind::Emissions => "emissions",
            CostKind::Fuel => "fuel",
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "emissions" => Ok(CostKind::Emissions),
            "fuel" => Ok(CostKind::Fuel),
            other => Err(Error::InvalidArgument(format!("unknown cost kind '{other}'"))),
        }
    }
}

/// Objective selection as the user states it, before normalisers are known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub kind: CostKind,
    /// NOx weight; only meaningful for [`CostKind::Emissions`].
    pub mu: f64,
}

impl Objective {
    pub fn emissions(mu: f64) -> Self {
        Self { kind: CostKind::Emissions, mu }
    }

    pub fn fuel() -> Self {
        Self { kind: CostKind::Fuel, mu: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::InvalidArgument(format!("mu must lie in [0, 1], got {}", self.mu)));
        }
        Ok(())
    }
}

/// A fully specified stage cost: objective plus mass-flow normalisers, kg/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSpec {
    pub kind: CostKind,
    pub mu: f64,
    pub nox_max: f64,
    pub hc_max: f64,
    pub fuel_max: f64,
}

impl CostSpec {
    /// Normalises by the engine's envelope maxima.
    pub fn for_engine(objective: Objective, maps: &EngineMapSet) -> Result<Self> {
        Self::new(objective, maps.m_dot_nox_max, maps.m_dot_hc_max, maps.m_dot_f_max)
    }

    pub fn new(objective: Objective, nox_max: f64, hc_max: f64, fuel_max: f64) -> Result<Self> {
        objective.validate()?;
        if [nox_max, hc_max, fuel_max].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument("cost normalisers must be positive".into()));
        }
        Ok(Self { kind: objective.kind, mu: objective.mu, nox_max, hc_max, fuel_max })
    }

    /// Cost rate for the given mass flows, per second.
    #[inline]
    pub fn rate(&self, fuel: f64, nox: f64, hc: f64) -> f64 {
        match self.kind {
            CostKind::Emissions => self.mu * nox / self.nox_max + (1.0 - self.mu) * hc / self.hc_max,
            CostKind::Fuel => fuel / self.fuel_max,
        }
    }
}

/// Dimensionless cost of one step. Steps with the engine off cost nothing.
#[inline]
pub fn stage_cost(step: &StepResult, spec: &CostSpec) -> f64 {
    if !step.engine_on() {
        return 0.0;
    }
    spec.rate(step.fuel_rate, step.nox_rate, step.hc_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::OperatingPoint;

    fn spec(objective: Objective) -> CostSpec {
        CostSpec::new(objective, 2.0, 0.5, 10.0).unwrap()
    }

    fn step(fuel: f64, nox: f64, hc: f64) -> StepResult {
        StepResult {
            fuel_rate: fuel,
            nox_rate: nox,
            hc_rate: hc,
            engine: Some(OperatingPoint::new(100.0, 10.0)),
            ..StepResult::default()
        }
    }

    #[test]
    fn weighted_hand_value() {
        let c = stage_cost(&step(1.0, 0.8, 0.1), &spec(Objective::emissions(0.5)));
        assert!((c - 0.3).abs() < 1e-12);
    }

    #[test]
    fn pure_nox_ignores_hc() {
        let s = spec(Objective::emissions(1.0));
        assert_eq!(stage_cost(&step(1.0, 0.8, 0.1), &s), stage_cost(&step(1.0, 0.8, 0.4), &s));
    }

    #[test]
    fn fuel_normalisation() {
        assert_eq!(stage_cost(&step(10.0, 0.8, 0.1), &spec(Objective::fuel())), 1.0);
    }

    #[test]
    fn engine_off_is_free() {
        let mut s = step(1.0, 1.0, 1.0);
        s.engine = None;
        assert_eq!(stage_cost(&s, &spec(Objective::emissions(0.3))), 0.0);
    }

    #[test]
    fn affine_in_mu() {
        let st = step(1.0, 0.37, 0.21);
        let c: Vec<f64> =
            [0.0, 0.4, 1.0].iter().map(|&m| stage_cost(&st, &spec(Objective::emissions(m)))).collect();
        let interp = c[0] + 0.4 * (c[2] - c[0]);
        assert!((c[1] - interp).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(CostSpec::new(Objective::emissions(1.2), 1.0, 1.0, 1.0).is_err());
        assert!(CostSpec::new(Objective::emissions(0.5), 0.0, 1.0, 1.0).is_err());
        assert!("bogus".parse::<CostKind>().is_err());
    }
}
