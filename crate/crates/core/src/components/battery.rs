use serde::{Deserialize, Serialize};

use super::Infeasible;
use crate::error::{Error, Result};

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch–Carlson
/// slopes), clamped outside its knots.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidArgument("spline needs at least 2 matching knots".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("spline knots must ascend and be finite".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                if delta[k - 1] * delta[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    pub fn eval(&self, q: f64) -> f64 {
        let n = self.x.len();
        if q <= self.x[0] {
            return self.y[0];
        }
        if q >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let k = self.x.partition_point(|&a| a <= q) - 1;
        let h = self.x[k + 1] - self.x[k];
        let t = (q - self.x[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[k] + h10 * h * self.d[k] + h01 * self.y[k + 1] + h11 * h * self.d[k + 1]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            x: self.x.clone(),
            y: self.y.iter().map(|v| v * factor).collect(),
            d: self.d.iter().map(|v| v * factor).collect(),
        }
    }
}

/// One-sided three-point end slope, limited to keep the end segment monotone.
fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d * m0 <= 0.0 {
        0.0
    } else if m0 * m1 <= 0.0 && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

/// LiFePO₄ cell open-circuit voltage against SOC, V.
const CELL_OCV: [(f64, f64); 13] = [
    (0.0, 2.50),
    (0.05, 3.00),
    (0.1, 3.20),
    (0.2, 3.25),
    (0.3, 3.28),
    (0.4, 3.29),
    (0.5, 3.30),
    (0.6, 3.31),
    (0.7, 3.33),
    (0.8, 3.34),
    (0.9, 3.36),
    (0.95, 3.40),
    (1.0, 3.55),
];

/// Cell internal resistance against SOC, mΩ.
const CELL_RESISTANCE: [(f64, f64); 9] = [
    (0.0, 3.0),
    (0.1, 1.6),
    (0.2, 1.2),
    (0.3, 1.1),
    (0.5, 1.0),
    (0.7, 1.0),
    (0.8, 1.05),
    (0.9, 1.15),
    (1.0, 1.4),
];

const CELL_NOMINAL_VOLTAGE: f64 = 3.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryConfig {
    pub energy_kwh: f64,
    pub nominal_voltage_v: f64,
    pub cell_capacity_ah: f64,
    pub c_rate_discharge: f64,
    pub c_rate_charge: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub eta_c_charge: f64,
    pub eta_c_discharge: f64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            energy_kwh: 70.0,
            nominal_voltage_v: 350.0,
            cell_capacity_ah: 100.0,
            c_rate_discharge: 3.0,
            c_rate_charge: 2.0,
            soc_min: 0.4,
            soc_max: 0.8,
            eta_c_charge: 0.98,
            eta_c_discharge: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryPack {
    /// A·s
    pub capacity: f64,
    /// Pack open-circuit voltage, V.
    pub v_oc: MonotoneSpline,
    /// Pack series resistance, Ω.
    pub r_eq: MonotoneSpline,
    pub eta_c_charge: f64,
    pub eta_c_discharge: f64,
    /// Charge current limit, A (negative).
    pub i_lim_ch: f64,
    /// Discharge current limit, A (positive).
    pub i_lim_dis: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// Wh
    pub energy: f64,
}

impl BatteryPack {
    /// Builds a pack from the bundled cell curves: cells in series to reach
    /// the nominal bus voltage, strings in parallel to reach the energy.
    pub fn from_config(cfg: &BatteryConfig) -> Result<Self> {
        let positive = [
            cfg.energy_kwh,
            cfg.nominal_voltage_v,
            cfg.cell_capacity_ah,
            cfg.c_rate_discharge,
            cfg.c_rate_charge,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Validation("battery ratings must be positive".into()));
        }
        if !(0.0 <= cfg.soc_min && cfg.soc_min < cfg.soc_max && cfg.soc_max <= 1.0) {
            return Err(Error::Validation("battery needs 0 <= soc_min < soc_max <= 1".into()));
        }
        for eta in [cfg.eta_c_charge, cfg.eta_c_discharge] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::Validation("coulombic efficiency must lie in (0, 1]".into()));
            }
        }
        let capacity_ah = cfg.energy_kwh * 1000.0 / cfg.nominal_voltage_v;
        let n_series = (cfg.nominal_voltage_v / CELL_NOMINAL_VOLTAGE).round().max(1.0);
        let n_parallel = capacity_ah / cfg.cell_capacity_ah;
        let (sx, ocv): (Vec<f64>, Vec<f64>) = CELL_OCV.iter().copied().unzip();
        let (rx, res): (Vec<f64>, Vec<f64>) = CELL_RESISTANCE.iter().copied().unzip();
        Ok(Self {
            capacity: capacity_ah * 3600.0,
            v_oc: MonotoneSpline::new(sx, ocv)?.scaled(n_series),
            r_eq: MonotoneSpline::new(rx, res)?.scaled(1e-3 * n_series / n_parallel),
            eta_c_charge: cfg.eta_c_charge,
            eta_c_discharge: cfg.eta_c_discharge,
            i_lim_ch: -cfg.c_rate_charge * capacity_ah,
            i_lim_dis: cfg.c_rate_discharge * capacity_ah,
            soc_min: cfg.soc_min,
            soc_max: cfg.soc_max,
            energy: cfg.energy_kwh * 1000.0,
        })
    }

    #[inline]
    pub fn soc_next(&self, soc: f64, current: f64, dt: f64) -> f64 {
        let eta = if current > 0.0 { self.eta_c_discharge } else { self.eta_c_charge };
        soc - eta * current * dt / self.capacity
    }

    #[inline]
    fn check_window(&self, soc_next: f64) -> Result<(), Infeasible> {
        if soc_next < self.soc_min || soc_next > self.soc_max {
            Err(Infeasible::SocWindow)
        } else {
            Ok(())
        }
    }

    /// Current as a fraction of the applicable limit.
    #[inline]
    pub fn current_from_factor(&self, phi: f64) -> f64 {
        if phi >= 0.0 {
            phi * self.i_lim_dis
        } else {
            phi * self.i_lim_ch.abs()
        }
    }
}

/// Battery outcome for one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryStep {
    /// A; positive when discharging.
    pub current: f64,
    /// Terminal power, W; positive when discharging.
    pub power: f64,
    pub soc_next: f64,
}

/// Current needed to deliver terminal power `p` (W) for `dt` seconds.
#[inline]
pub fn battery_from_power(p: f64, soc: f64, batt: &BatteryPack, dt: f64) -> Result<BatteryStep, Infeasible> {
    let v = batt.v_oc.eval(soc);
    let r = batt.r_eq.eval(soc);
    let disc = v * v - 4.0 * r * p;
    if disc < 0.0 {
        return Err(Infeasible::BatteryVoltageLimited);
    }
    // Small root of r i² - v i + p = 0, rationalised to avoid cancellation.
    let current = 2.0 * p / (v + disc.sqrt());
    if current > batt.i_lim_dis || current < batt.i_lim_ch {
        return Err(Infeasible::BatteryCurrentLimit);
    }
    let soc_next = batt.soc_next(soc, current, dt);
    batt.check_window(soc_next)?;
    Ok(BatteryStep { current, power: p, soc_next })
}

/// Battery outcome when the current is commanded directly as a fraction of
/// its limit: `phi = 1` is full discharge, `phi = -1` full charge.
#[inline]
pub fn battery_from_current_factor(
    phi: f64,
    soc: f64,
    batt: &BatteryPack,
    dt: f64,
) -> Result<BatteryStep, Infeasible> {
    if !(-1.0..=1.0).contains(&phi) {
        return Err(Infeasible::ControlOutOfRange);
    }
    let current = batt.current_from_factor(phi);
    let v = batt.v_oc.eval(soc);
    let r = batt.r_eq.eval(soc);
    let power = v * current - r * current * current;
    let soc_next = batt.soc_next(soc, current, dt);
    batt.check_window(soc_next)?;
    Ok(BatteryStep { current, power, soc_next })
}
