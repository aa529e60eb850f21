use serde::{Deserialize, Serialize};

use super::engine::MAP_RESOLUTION;
use super::grid::{linspace, Curve, Grid2D};
use crate::error::{Error, Result};

/// Efficiency assigned where the loss model degenerates (zero speed or torque).
const EFFICIENCY_FLOOR: f64 = 0.5;

/// Loss model for a synthetic electric machine, expressed as fractions of
/// rated power: `c0 + copper·t² + iron·w^1.5 + windage·w²` with `t` the
/// torque over peak torque and `w` the speed over maximum speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmSpec {
    /// W
    pub rated_power: f64,
    /// rad/s
    pub omega_max: f64,
    /// Corner speed between the constant-torque and constant-power regions, rad/s.
    pub omega_base: f64,
    pub loss_constant: f64,
    pub loss_copper: f64,
    pub loss_iron: f64,
    pub loss_windage: f64,
}

impl EmSpec {
    pub fn new(rated_power: f64, omega_max: f64, omega_base: f64) -> Self {
        Self {
            rated_power,
            omega_max,
            omega_base,
            loss_constant: 0.004,
            loss_copper: 0.038,
            loss_iron: 0.016,
            loss_windage: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rated_power > 0.0 && self.omega_base > 0.0 && self.omega_base < self.omega_max) {
            return Err(Error::InvalidArgument(
                "e-machine needs positive power and 0 < base speed < max speed".into(),
            ));
        }
        let coeffs = [self.loss_constant, self.loss_copper, self.loss_iron, self.loss_windage];
        if coeffs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidArgument("loss coefficients must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn peak_torque(&self) -> f64 {
        self.rated_power / self.omega_base
    }

    pub fn torque_limit(&self, omega: f64) -> f64 {
        if omega <= self.omega_base {
            self.peak_torque()
        } else {
            self.rated_power / omega
        }
    }

    pub fn efficiency(&self, omega: f64, torque: f64) -> f64 {
        let t = torque.abs() / self.peak_torque();
        let w = omega.abs() / self.omega_max;
        let p = torque.abs() * omega.abs() / self.rated_power;
        let loss = self.loss_constant
            + self.loss_copper * t * t
            + self.loss_iron * w.powf(1.5)
            + self.loss_windage * w * w;
        if p <= 0.0 {
            EFFICIENCY_FLOOR
        } else {
            (p / (p + loss)).max(EFFICIENCY_FLOOR)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmMapSet {
    /// Conversion efficiency over (speed, torque), dimensionless.
    pub efficiency: Grid2D,
    pub torque_sup: Curve,
    pub torque_inf: Curve,
    pub omega_max: f64,
    pub rated_power: f64,
}

impl EmMapSet {
    pub fn validate(&self) -> Result<()> {
        self.efficiency.validate()?;
        self.torque_sup.validate()?;
        self.torque_inf.validate()?;
        if self.efficiency.values.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
            return Err(Error::Validation("efficiency must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Grid node inside the torque envelope with the highest efficiency.
    pub fn peak(&self) -> (f64, f64, f64) {
        let g = &self.efficiency;
        let mut best = (0.0, 0.0, f64::NEG_INFINITY);
        for (i, &w) in g.x_axis.iter().enumerate() {
            let (lo, hi) = (self.torque_inf.eval(w), self.torque_sup.eval(w));
            for (j, &t) in g.y_axis.iter().enumerate() {
                if t >= lo && t <= hi && g.at(i, j) > best.2 {
                    best = (w, t, g.at(i, j));
                }
            }
        }
        best
    }

    /// A map with uniform efficiency `eta` over a rectangular envelope.
    pub fn constant(eta: f64, omega_max: f64, torque_limit: f64) -> Result<Self> {
        let speeds = vec![0.0, omega_max];
        let torques = vec![-torque_limit, torque_limit];
        Ok(Self {
            efficiency: Grid2D::new("efficiency", "-", speeds.clone(), torques, vec![eta; 4])?,
            torque_sup: Curve::new(speeds.clone(), vec![torque_limit; 2])?,
            torque_inf: Curve::new(speeds, vec![-torque_limit; 2])?,
            omega_max,
            rated_power: torque_limit * omega_max,
        })
    }
}

/// Builds the efficiency map and torque envelope for `spec`.
pub fn generate_em_map(spec: &EmSpec) -> Result<EmMapSet> {
    spec.validate()?;
    let t_peak = spec.peak_torque();
    let speeds = linspace(0.0, spec.omega_max, MAP_RESOLUTION);
    let torques = linspace(-t_peak, t_peak, MAP_RESOLUTION);
    let efficiency =
        Grid2D::from_fn("efficiency", "-", speeds.clone(), torques, |w, t| spec.efficiency(w, t))?;

    let mut curve_speeds = speeds;
    curve_speeds.push(spec.omega_base);
    curve_speeds.sort_by(f64::total_cmp);
    curve_speeds.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let sup: Vec<f64> = curve_speeds.iter().map(|&w| spec.torque_limit(w)).collect();
    let inf: Vec<f64> = sup.iter().map(|t| -t).collect();

    Ok(EmMapSet {
        efficiency,
        torque_sup: Curve::new(curve_speeds.clone(), sup)?,
        torque_inf: Curve::new(curve_speeds, inf)?,
        omega_max: spec.omega_max,
        rated_power: spec.rated_power,
    })
}
