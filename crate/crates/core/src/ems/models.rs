//! The hybrid energy-management problems in the form the DP solver consumes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cost::{stage_cost, CostSpec};
use crate::architectures::{
    parallel_drive, parallel_step_with_drive, series_demand, series_step_electric, series_step_with_demand,
    ParallelDrive, ParallelPlant, SeriesDemand, SeriesPlant, StepInput, ALPHA_RANGE,
};
use crate::components::{battery_from_current_factor, generator_evaluate, BatteryStep, StepResult};
use crate::dp::{blend, terminal_soc_penalty, DpModel, Grid, Point, Transition, INFEASIBLE, NO_CONTROL};
use crate::error::{Error, Result};
use crate::maps::linspace;

/// Largest grid size accepted on any axis.
pub const MAX_GRID_NODES: usize = 10_000;

/// Grid sizes and the charge-sustaining setup for hybrid runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DpConfig {
    pub soc_nodes: usize,
    /// Engine-speed nodes including the engine-off node.
    pub speed_nodes: usize,
    pub alpha_nodes: usize,
    pub phi_nodes: usize,
    pub soc_initial: f64,
    /// Terminal deficit penalty per unit SOC; derived from the horizon when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal_weight: Option<f64>,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            soc_nodes: 201,
            speed_nodes: 25,
            alpha_nodes: 81,
            phi_nodes: 41,
            soc_initial: 0.6,
            terminal_weight: None,
        }
    }
}

impl DpConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("soc_nodes", self.soc_nodes),
            ("speed_nodes", self.speed_nodes),
            ("alpha_nodes", self.alpha_nodes),
            ("phi_nodes", self.phi_nodes),
        ] {
            if !(2..=MAX_GRID_NODES).contains(&n) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in 2..={MAX_GRID_NODES}, got {n}"
                )));
            }
        }
        if let Some(w) = self.terminal_weight {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidArgument("terminal weight must be positive".into()));
            }
        }
        Ok(())
    }

    /// Human-readable notes about grids too coarse for reliable results.
    pub fn coarseness_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let checks = [
            ("soc_nodes", self.soc_nodes, 51),
            ("speed_nodes", self.speed_nodes, 9),
            ("alpha_nodes", self.alpha_nodes, 11),
            ("phi_nodes", self.phi_nodes, 11),
        ];
        for (name, n, min) in checks {
            if n < min {
                out.push(format!("{name} = {n} is coarse (< {min}); results will be approximate"));
            }
        }
        out
    }

    /// Penalty weight: a 0.01 SOC deficit outweighs the largest possible
    /// running cost (one per stage) twice over.
    pub fn weight_for(&self, stages: usize) -> f64 {
        self.terminal_weight.unwrap_or(200.0 * stages.max(1) as f64)
    }
}

fn soc_axis(plant_min: f64, plant_max: f64, cfg: &DpConfig) -> Result<Vec<f64>> {
    if !(plant_min..=plant_max).contains(&cfg.soc_initial) {
        return Err(Error::InvalidArgument(format!(
            "initial SOC {} outside the battery window [{plant_min}, {plant_max}]",
            cfg.soc_initial
        )));
    }
    Ok(linspace(plant_min, plant_max, cfg.soc_nodes))
}

pub struct ParallelModel<'a> {
    plant: &'a ParallelPlant,
    inputs: &'a [StepInput],
    dt: f64,
    cost: CostSpec,
    states: Grid,
    controls: Grid,
    soc_target: f64,
    weight: f64,
}

impl<'a> ParallelModel<'a> {
    pub fn new(
        plant: &'a ParallelPlant,
        inputs: &'a [StepInput],
        dt: f64,
        cost: CostSpec,
        cfg: &DpConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let b = &plant.battery;
        Ok(Self {
            plant,
            inputs,
            dt,
            cost,
            states: Grid::new(vec![soc_axis(b.soc_min, b.soc_max, cfg)?])?,
            controls: Grid::new(vec![linspace(ALPHA_RANGE.0, ALPHA_RANGE.1, cfg.alpha_nodes)])?,
            soc_target: cfg.soc_initial,
            weight: cfg.weight_for(inputs.len()),
        })
    }
}

impl DpModel for ParallelModel<'_> {
    type Info = StepResult;
    /// Mechanical side for every split value.
    type Stage = Vec<Option<ParallelDrive>>;

    fn stages(&self) -> usize {
        self.inputs.len()
    }

    fn state_grid(&self) -> &Grid {
        &self.states
    }

    fn control_grid(&self) -> &Grid {
        &self.controls
    }

    fn prepare(&self, k: usize) -> Self::Stage {
        self.controls.axes()[0].iter().map(|&a| parallel_drive(&self.inputs[k], a, self.plant).ok()).collect()
    }

    fn step(
        &self,
        stage: &Self::Stage,
        _k: usize,
        x: &[f64],
        c: usize,
        _u: &[f64],
    ) -> Option<Transition<StepResult>> {
        let drive = stage[c].as_ref()?;
        let res = parallel_step_with_drive(drive, x[0], self.plant, self.dt).ok()?;
        let mut next = Point::new();
        next.push(res.soc_next);
        Some(Transition { next, cost: stage_cost(&res, &self.cost), info: res })
    }

    fn terminal_cost(&self, x: &[f64]) -> f64 {
        terminal_soc_penalty(x[0], self.soc_target, self.weight)
    }
}

/// Where a battery transition lands on the SOC axis.
#[derive(Debug, Clone, Copy)]
struct Landing {
    batt: BatteryStep,
    cell: usize,
    frac: f64,
}

pub struct SeriesModel<'a> {
    plant: &'a SeriesPlant,
    inputs: &'a [StepInput],
    dt: f64,
    cost: CostSpec,
    states: Grid,
    controls: Grid,
    soc_target: f64,
    weight: f64,
    /// `[i * n_phi + j]`: battery outcome of current factor `j` at SOC node `i`.
    landings: Vec<Option<Landing>>,
    use_kernel: bool,
}

impl<'a> SeriesModel<'a> {
    pub fn new(
        plant: &'a SeriesPlant,
        inputs: &'a [StepInput],
        dt: f64,
        cost: CostSpec,
        cfg: &DpConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let b = &plant.battery;
        let socs = soc_axis(b.soc_min, b.soc_max, cfg)?;
        let m = &plant.engine.maps;
        let mut speeds = vec![0.0];
        speeds.extend(linspace(m.omega_idle, m.omega_max, cfg.speed_nodes - 1));
        if cfg.speed_nodes == 2 {
            speeds[1] = m.omega_idle;
        }
        let phis = linspace(-1.0, 1.0, cfg.phi_nodes);

        let mut landings = Vec::with_capacity(socs.len() * phis.len());
        for &soc in &socs {
            for &phi in &phis {
                landings.push(battery_from_current_factor(phi, soc, b, dt).ok().and_then(|batt| {
                    let q = batt.soc_next;
                    if !(q >= socs[0] && q <= socs[socs.len() - 1]) {
                        return None;
                    }
                    let cell = socs.partition_point(|&v| v <= q).saturating_sub(1).min(socs.len() - 2);
                    let frac = (q - socs[cell]) / (socs[cell + 1] - socs[cell]);
                    Some(Landing { batt, cell, frac })
                }));
            }
        }
        Ok(Self {
            plant,
            inputs,
            dt,
            cost,
            states: Grid::new(vec![socs, speeds.clone()])?,
            controls: Grid::new(vec![phis, speeds])?,
            soc_target: cfg.soc_initial,
            weight: cfg.weight_for(inputs.len()),
            landings,
            use_kernel: true,
        })
    }

    /// Forces the generic backward recursion; used to check the kernel.
    pub fn without_kernel(mut self) -> Self {
        self.use_kernel = false;
        self
    }

    fn speeds(&self) -> &[f64] {
        &self.states.axes()[1]
    }

    /// Stage-cost rate along the engine map's torque axis at engine speed `w`.
    fn cost_column(&self, w: f64) -> Vec<f64> {
        let m = &self.plant.engine.maps;
        let fuel = m.fuel.column_at(w);
        let nox = m.nox.column_at(w);
        let hc = m.hc.column_at(w);
        (0..fuel.len()).map(|t| self.cost.rate(fuel[t], nox[t], hc[t])).collect()
    }
}

impl DpModel for SeriesModel<'_> {
    type Info = StepResult;
    type Stage = Option<SeriesDemand>;

    fn stages(&self) -> usize {
        self.inputs.len()
    }

    fn state_grid(&self) -> &Grid {
        &self.states
    }

    fn control_grid(&self) -> &Grid {
        &self.controls
    }

    fn prepare(&self, k: usize) -> Self::Stage {
        series_demand(&self.inputs[k], self.plant).ok()
    }

    fn step(
        &self,
        stage: &Self::Stage,
        _k: usize,
        x: &[f64],
        c: usize,
        u: &[f64],
    ) -> Option<Transition<StepResult>> {
        let d = stage.as_ref()?;
        let (soc, omega_prev) = (x[0], x[1]);
        let (phi, omega_eng) = (u[0], u[1]);
        let res = if omega_eng == 0.0 {
            // Engine off: the battery carries the bus. One control index stands
            // for the mode; the current factor is implied.
            if c != 0 {
                return None;
            }
            series_step_electric(d, soc, self.plant, self.dt)
        } else {
            series_step_with_demand(d, soc, omega_prev, phi, omega_eng, self.plant, self.dt)
        }
        .ok()?;
        let mut next = Point::new();
        next.push(res.soc_next);
        next.push(omega_eng);
        Some(Transition { next, cost: stage_cost(&res, &self.cost), info: res })
    }

    fn terminal_cost(&self, x: &[f64]) -> f64 {
        terminal_soc_penalty(x[0], self.soc_target, self.weight)
    }

    fn backward_stage(
        &self,
        stage: &Self::Stage,
        _k: usize,
        next_value: &[f64],
        value: &mut [f64],
        policy: &mut [u32],
    ) -> bool {
        if !self.use_kernel {
            return false;
        }
        let Some(d) = stage else {
            value.fill(INFEASIBLE);
            policy.fill(NO_CONTROL);
            return true;
        };
        let p = self.plant;
        let socs = &self.states.axes()[0];
        let speeds = self.speeds();
        let (ns, ne, nphi) = (socs.len(), speeds.len(), self.controls.axes()[0].len());
        let tc = p.coupling.ratio;
        let (j_gen, j_eng) = (p.generator.inertia, p.engine.inertia);
        let dt = self.dt;

        // Cost-to-go after each (SOC node, current factor, engine speed), and
        // the generator torque that engine speed would need.
        let mut vn = vec![INFEASIBLE; ns * nphi * ne];
        let mut tgen = vec![f64::NAN; ns * nphi * ne];
        for (ij, landing) in self.landings.iter().enumerate() {
            let Some(l) = landing else { continue };
            let p_gen = d.bus_load - l.batt.power;
            for e in 0..ne {
                vn[ij * ne + e] = blend(l.cell, l.frac, |k| next_value[k * ne + e]);
                if e > 0 {
                    if let Ok(t) = generator_evaluate(p_gen, speeds[e] * tc, &p.generator) {
                        tgen[ij * ne + e] = t;
                    }
                }
            }
        }

        // Engine off: battery-only step from each SOC node, control index 0.
        let off: Vec<f64> = socs
            .iter()
            .map(|&soc| match series_step_electric(d, soc, p, dt) {
                Ok(r) => self.states.interp(next_value, &[r.soc_next, 0.0]),
                Err(_) => INFEASIBLE,
            })
            .collect();

        let maps = &p.engine.maps;
        let t_axis = &maps.fuel.y_axis;
        let t_step = (t_axis[t_axis.len() - 1] - t_axis[0]) / (t_axis.len() - 1) as f64;
        let t_cells = t_axis.len() - 2;
        let columns: Vec<Vec<f64>> = speeds.iter().map(|&w| self.cost_column(w.max(speeds[1]))).collect();
        let t_max: Vec<f64> = speeds.iter().map(|&w| maps.torque_max.eval(w)).collect();

        value.par_chunks_mut(ne).zip(policy.par_chunks_mut(ne)).enumerate().for_each(|(i, (vrow, prow))| {
            for (pi, &w_prev) in speeds.iter().enumerate() {
                let mut best = (off[i], if off[i] < INFEASIBLE { 0 } else { NO_CONTROL });
                for j in 0..nphi {
                    let ij = i * nphi + j;
                    if self.landings[ij].is_none() {
                        continue;
                    }
                    for e in 1..ne {
                        let tg = tgen[ij * ne + e];
                        if tg.is_nan() {
                            continue;
                        }
                        let v_next = vn[ij * ne + e];
                        if v_next == INFEASIBLE {
                            continue;
                        }
                        let omega_dot = (speeds[e] - w_prev) / dt;
                        let torque = tc * (tg + j_gen * omega_dot * tc) + j_eng * omega_dot;
                        if torque > t_max[e] {
                            continue;
                        }
                        let q = (torque.max(0.0) - t_axis[0]) / t_step;
                        let cell = (q.max(0.0) as usize).min(t_cells);
                        let f = (q - cell as f64).min(1.0);
                        let col = &columns[e];
                        let cost = col[cell] + f * (col[cell + 1] - col[cell]);
                        let v = cost + v_next;
                        if v < best.0 {
                            best = (v, (j * ne + e) as u32);
                        }
                    }
                }
                vrow[pi] = best.0;
                prow[pi] = best.1;
            }
        });
        true
    }
}
