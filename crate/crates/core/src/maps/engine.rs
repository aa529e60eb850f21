//! Synthetic diesel engine maps.
//!
//! Fuel follows a Willans line: at fixed speed the fuel power is affine in
//! brake power, with a friction intercept from a quadratic FMEP model and a
//! slope set by a speed-dependent indicated efficiency. NOx and HC rates are
//! brake-specific maps (g/kWh) times brake power, plus a small motoring term.
//! Their hot zones sit at opposite corners of the load range and both are low
//! at medium-high load and low-mid speed.

use serde::{Deserialize, Serialize};

use super::grid::{linspace, Curve, Grid2D};
use crate::error::{Error, Result};

/// Lower heating value of diesel, J/kg.
pub const DIESEL_LHV: f64 = 42.5e6;

/// Breakpoints per map axis.
pub const MAP_RESOLUTION: usize = 33;

const RPM: f64 = std::f64::consts::PI / 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSpec {
    pub displacement_l: f64,
    /// W
    pub rated_power: f64,
    /// rad/s
    pub omega_rated: f64,
    /// N·m
    pub torque_peak: f64,
    /// rad/s
    pub omega_torque_peak: f64,
    /// rad/s
    pub omega_idle: f64,
}

impl EngineSpec {
    /// The 8.7 l reference engine: 147 kW at 2000 rpm, 1200 N·m at 1100 rpm,
    /// idling at 600 rpm.
    pub fn reference() -> Self {
        Self {
            displacement_l: 8.7,
            rated_power: 147_000.0,
            omega_rated: 2000.0 * RPM,
            torque_peak: 1200.0,
            omega_torque_peak: 1100.0 * RPM,
            omega_idle: 600.0 * RPM,
        }
    }

    pub fn omega_max(&self) -> f64 {
        1.1 * self.omega_rated
    }

    pub fn validate(&self) -> Result<()> {
        let all_positive = [
            self.displacement_l,
            self.rated_power,
            self.omega_rated,
            self.torque_peak,
            self.omega_torque_peak,
            self.omega_idle,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if !all_positive {
            return Err(Error::InvalidArgument("engine parameters must be positive".into()));
        }
        if !(self.omega_idle < self.omega_torque_peak && self.omega_torque_peak < self.omega_rated) {
            return Err(Error::InvalidArgument(
                "engine speeds must satisfy idle < peak-torque speed < rated speed".into(),
            ));
        }
        Ok(())
    }

    /// Full-load torque: rising from idle to the torque peak, flat until the
    /// rated power caps it, then the power hyperbola down to rated speed and
    /// a linear governor roll-off to zero at maximum speed.
    pub fn full_load_torque(&self, omega: f64) -> f64 {
        let omega_max = self.omega_max();
        if omega < self.omega_idle || omega > omega_max {
            return 0.0;
        }
        let shape = if omega < self.omega_torque_peak {
            let f = (omega - self.omega_idle) / (self.omega_torque_peak - self.omega_idle);
            self.torque_peak * (IDLE_TORQUE_FRACTION + (1.0 - IDLE_TORQUE_FRACTION) * f)
        } else {
            self.torque_peak
        };
        if omega <= self.omega_rated {
            shape.min(self.rated_power / omega)
        } else {
            let at_rated = self.rated_power / self.omega_rated;
            at_rated * (omega_max - omega) / (omega_max - self.omega_rated)
        }
    }

    /// Friction power from a quadratic FMEP model, W.
    pub fn friction_power(&self, omega: f64) -> f64 {
        let r = omega / self.omega_rated;
        let fmep = 0.8e5 + 1.2e5 * r * r;
        fmep * self.displacement_l * 1e-3 * omega / (4.0 * std::f64::consts::PI)
    }

    /// Indicated (Willans slope) efficiency, concave in normalised speed.
    pub fn indicated_efficiency(&self, omega: f64) -> f64 {
        let s = self.normalised_speed(omega);
        0.49 - 0.1 * (s - 0.55) * (s - 0.55)
    }

    pub fn normalised_speed(&self, omega: f64) -> f64 {
        ((omega - self.omega_idle) / (self.omega_max() - self.omega_idle)).clamp(0.0, 1.0)
    }

    /// Fuel mass flow, kg/s. Negative torque is treated as zero brake power.
    pub fn fuel_rate(&self, omega: f64, torque: f64) -> f64 {
        let brake = torque.max(0.0) * omega;
        (brake + self.friction_power(omega)) / (self.indicated_efficiency(omega) * DIESEL_LHV)
    }

    pub fn brake_efficiency(&self, omega: f64, torque: f64) -> f64 {
        torque * omega / (self.fuel_rate(omega, torque) * DIESEL_LHV)
    }

    /// Brake-specific NOx, g/kWh: a ridge at mid speed, a peak towards full
    /// load at mid-high speed and a rise at light load.
    pub fn nox_specific(&self, omega: f64, torque: f64) -> f64 {
        let s = self.normalised_speed(omega);
        let l = self.load(torque);
        NOX_FLOOR
            + NOX_RIDGE * bump(s, 0.55, 0.15)
            + NOX_LIGHT_LOAD * (-l / 0.15).exp()
            + NOX_FULL_LOAD * l.powi(8) * bump(s, 0.6, 0.25)
    }

    /// Brake-specific HC, g/kWh: large at light load, strongest at low speed,
    /// with a milder rise towards full load from rich running.
    pub fn hc_specific(&self, omega: f64, torque: f64) -> f64 {
        let s = self.normalised_speed(omega);
        let l = self.load(torque);
        // Slow, cool combustion keeps HC high up to larger loads.
        let slow = bump(s, 0.0, 0.3);
        HC_FLOOR + HC_LIGHT_LOAD * (-l / (0.2 + 0.3 * slow)).exp() * (0.4 + 0.6 * slow) + HC_RICH * l.powi(4)
    }

    fn load(&self, torque: f64) -> f64 {
        (torque / self.torque_peak).max(0.0)
    }

    /// Pollutant mass flow, kg/s: the specific value times brake power, plus
    /// the motoring fuel flow at emission index `idle_index` (g/kg).
    fn pollutant_rate(&self, omega: f64, torque: f64, specific: f64, idle_index: f64) -> f64 {
        let brake = torque.max(0.0) * omega;
        specific * brake / 3.6e9 + self.fuel_rate(omega, 0.0) * idle_index * 1e-3
    }

    pub fn nox_rate(&self, omega: f64, torque: f64) -> f64 {
        self.pollutant_rate(omega, torque, self.nox_specific(omega, torque), NOX_IDLE_INDEX)
    }

    pub fn hc_rate(&self, omega: f64, torque: f64) -> f64 {
        self.pollutant_rate(omega, torque, self.hc_specific(omega, torque), HC_IDLE_INDEX)
    }
}

fn bump(x: f64, centre: f64, width: f64) -> f64 {
    (-(x - centre).powi(2) / (2.0 * width * width)).exp()
}

const IDLE_TORQUE_FRACTION: f64 = 0.65;
const NOX_FLOOR: f64 = 1.5;
const NOX_RIDGE: f64 = 5.5;
const NOX_LIGHT_LOAD: f64 = 12.0;
const NOX_FULL_LOAD: f64 = 28.0;
const NOX_IDLE_INDEX: f64 = 1.0;
const HC_FLOOR: f64 = 0.05;
const HC_LIGHT_LOAD: f64 = 1.2;
const HC_RICH: f64 = 0.4;
const HC_IDLE_INDEX: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineMapSet {
    /// kg/s
    pub fuel: Grid2D,
    /// kg/s
    pub nox: Grid2D,
    /// kg/s
    pub hc: Grid2D,
    /// Full-load torque curve, N·m.
    pub torque_max: Curve,
    pub omega_idle: f64,
    pub omega_max: f64,
    /// Speed at which rated power is reached, rad/s.
    pub omega_rated: f64,
    /// W
    pub rated_power: f64,
    pub m_dot_nox_max: f64,
    pub m_dot_hc_max: f64,
    pub m_dot_f_max: f64,
}

/// Which rate map to address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    Fuel,
    Nox,
    Hc,
}

impl EngineMapSet {
    pub fn grid(&self, species: Species) -> &Grid2D {
        match species {
            Species::Fuel => &self.fuel,
            Species::Nox => &self.nox,
            Species::Hc => &self.hc,
        }
    }

    /// Maximum full-load power along the torque curve, W.
    pub fn envelope_max_power(&self) -> f64 {
        self.torque_max.max_power()
    }

    pub fn peak_torque(&self) -> f64 {
        self.torque_max.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Brake-specific fuel consumption at rated power, g/kWh.
    pub fn bsfc_at_rated(&self) -> f64 {
        let torque = self.torque_max.eval(self.omega_rated);
        let fuel = self.fuel.interp_clamped(self.omega_rated, torque);
        fuel * 3.6e9 / (torque * self.omega_rated)
    }

    /// Maximum of a rate map over the feasible envelope: every speed row,
    /// at the torque nodes below full load and at full load itself.
    pub fn envelope_max(grid: &Grid2D, torque_max: &Curve) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for (i, &w) in grid.x_axis.iter().enumerate() {
            let limit = torque_max.eval(w);
            for (j, &t) in grid.y_axis.iter().enumerate() {
                if t <= limit {
                    best = best.max(grid.at(i, j));
                }
            }
            best = best.max(grid.interp_clamped(w, limit));
        }
        best
    }

    fn refresh_maxima(&mut self) {
        self.m_dot_f_max = Self::envelope_max(&self.fuel, &self.torque_max);
        self.m_dot_nox_max = Self::envelope_max(&self.nox, &self.torque_max);
        self.m_dot_hc_max = Self::envelope_max(&self.hc, &self.torque_max);
    }

    /// Specific emission map, g/kWh, over positive brake power; `NaN` at zero torque.
    pub fn specific_map(&self, species: Species) -> Grid2D {
        let g = self.grid(species);
        let mut out = g.clone();
        out.kind = format!("specific_{}", g.kind);
        out.units = "g/kWh".into();
        let ny = g.y_axis.len();
        for (i, &w) in g.x_axis.iter().enumerate() {
            for (j, &t) in g.y_axis.iter().enumerate() {
                let p = w * t;
                out.values[i * ny + j] = if p > 0.0 { g.at(i, j) * 3.6e9 / p } else { f64::NAN };
            }
        }
        out
    }

    /// Node `(speed index, torque index)` of the largest specific emission
    /// inside the full-load envelope.
    pub fn specific_argmax(&self, species: Species) -> (usize, usize) {
        let spec = self.specific_map(species);
        let mut best = (0, 0);
        let mut best_v = f64::NEG_INFINITY;
        for (i, &w) in spec.x_axis.iter().enumerate() {
            let limit = self.torque_max.eval(w);
            for (j, &t) in spec.y_axis.iter().enumerate() {
                let v = spec.at(i, j);
                if t <= limit && v.is_finite() && v > best_v {
                    best_v = v;
                    best = (i, j);
                }
            }
        }
        best
    }

    pub fn validate(&self) -> Result<()> {
        for g in [&self.fuel, &self.nox, &self.hc] {
            g.validate()?;
            if g.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Validation(format!("{} map has negative or NaN entries", g.kind)));
            }
        }
        self.torque_max.validate()?;
        if !(self.omega_idle < self.omega_max && self.rated_power > 0.0) {
            return Err(Error::Validation("engine speed range or rating invalid".into()));
        }
        Ok(())
    }
}

/// Builds fuel, NOx and HC maps plus the full-load curve for `spec`.
pub fn generate_engine_maps(spec: &EngineSpec) -> Result<EngineMapSet> {
    spec.validate()?;
    let omega_max = spec.omega_max();
    let speeds = linspace(spec.omega_idle, omega_max, MAP_RESOLUTION);
    let torques = linspace(0.0, spec.torque_peak, MAP_RESOLUTION);

    let fuel =
        Grid2D::from_fn("fuel_rate", "kg/s", speeds.clone(), torques.clone(), |w, t| spec.fuel_rate(w, t))?;
    let nox =
        Grid2D::from_fn("nox_rate", "kg/s", speeds.clone(), torques.clone(), |w, t| spec.nox_rate(w, t))?;
    let hc = Grid2D::from_fn("hc_rate", "kg/s", speeds.clone(), torques, |w, t| spec.hc_rate(w, t))?;

    // Curve nodes: map speeds plus the shape breakpoints.
    let cap = spec.rated_power / spec.torque_peak;
    let mut curve_speeds = speeds;
    for w in [spec.omega_torque_peak, cap, spec.omega_rated] {
        if w > spec.omega_idle && w < omega_max {
            curve_speeds.push(w);
        }
    }
    curve_speeds.sort_by(f64::total_cmp);
    curve_speeds.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let curve_values = curve_speeds.iter().map(|&w| spec.full_load_torque(w)).collect();
    let torque_max = Curve::new(curve_speeds, curve_values)?;

    let mut maps = EngineMapSet {
        fuel,
        nox,
        hc,
        torque_max,
        omega_idle: spec.omega_idle,
        omega_max,
        omega_rated: spec.omega_rated,
        rated_power: spec.rated_power,
        m_dot_nox_max: 0.0,
        m_dot_hc_max: 0.0,
        m_dot_f_max: 0.0,
    };
    maps.refresh_maxima();
    Ok(maps)
}

/// Rescales an engine to a new rated power with the speed range unchanged.
/// Torque and every rate scale by the same factor, so specific consumption
/// and emissions are preserved at matching normalised load.
pub fn scale_engine_maps(maps: &EngineMapSet, new_rated_power: f64) -> Result<EngineMapSet> {
    if !(new_rated_power.is_finite() && new_rated_power > 0.0) {
        return Err(Error::InvalidArgument("new rated power must be positive".into()));
    }
    let factor = new_rated_power / maps.rated_power;
    let scale_grid = |g: &Grid2D| Grid2D {
        kind: g.kind.clone(),
        units: g.units.clone(),
        x_axis: g.x_axis.clone(),
        y_axis: g.y_axis.iter().map(|t| t * factor).collect(),
        values: g.values.iter().map(|v| v * factor).collect(),
    };
    let mut out = EngineMapSet {
        fuel: scale_grid(&maps.fuel),
        nox: scale_grid(&maps.nox),
        hc: scale_grid(&maps.hc),
        torque_max: maps.torque_max.scaled(factor),
        omega_idle: maps.omega_idle,
        omega_max: maps.omega_max,
        omega_rated: maps.omega_rated,
        rated_power: new_rated_power,
        m_dot_nox_max: 0.0,
        m_dot_hc_max: 0.0,
        m_dot_f_max: 0.0,
    };
    out.refresh_maxima();
    Ok(out)
}
