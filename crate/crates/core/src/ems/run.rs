//! Experiment drivers: single runs, μ sweeps and architecture comparisons.

use serde::{Deserialize, Serialize};

use super::cost::{stage_cost, CostKind, CostSpec, Objective};
use super::models::{DpConfig, ParallelModel, SeriesModel};
use crate::architectures::{
    conventional_step, parallel_step, parallel_torque_residual, series_demand, series_power_residual,
    series_step_electric, series_step_with_demand, step_inputs, Architecture, Plant, StepInput,
};
use crate::components::StepResult;
use crate::dp::{rollout, solve_backward, DpModel, DpSolution, Point};
use crate::error::{Error, Result};
use crate::mission::MissionProfile;

/// Diesel density, kg/l.
pub const DIESEL_DENSITY: f64 = 0.835;

/// Mission-averaged results of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub architecture: Architecture,
    pub mission: String,
    pub cost_kind: CostKind,
    pub mu: f64,
    pub fuel_lph: f64,
    pub nox_gph: f64,
    pub hc_gph: f64,
    /// Final minus initial SOC; zero for the conventional plant.
    pub dsoc: f64,
    pub soc_initial: f64,
    pub soc_final: f64,
    pub duration_s: f64,
    pub steps: usize,
    /// Share of steps with the engine running.
    pub engine_on_fraction: f64,
    /// Running plus terminal cost of the rolled-out trajectory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    /// Cost-to-go the backward pass predicted for the initial state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted: Option<f64>,
}

impl RunReport {
    pub const CSV_HEADER: [&'static str; 7] =
        ["arch", "cost_kind", "mu", "fuel_lph", "nox_gph", "hc_gph", "dsoc"];

    pub fn csv_fields(&self) -> [String; 7] {
        [
            self.architecture.to_string(),
            self.cost_kind.to_string(),
            self.mu.to_string(),
            self.fuel_lph.to_string(),
            self.nox_gph.to_string(),
            self.hc_gph.to_string(),
            self.dsoc.to_string(),
        ]
    }
}

/// Per-step log of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Names of the control columns (`alpha` or `phi`; none for conventional).
    pub control_names: Vec<String>,
    pub rows: Vec<TrajectoryRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub k: usize,
    pub t: f64,
    /// SOC at the start of the step; NaN without a battery.
    pub soc: f64,
    /// rad/s; zero with the engine off.
    pub omega_eng: f64,
    pub controls: Vec<f64>,
    /// kg/s
    pub fuel_rate: f64,
    pub nox_rate: f64,
    pub hc_rate: f64,
    /// Battery terminal power, W.
    pub p_b: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub trajectory: Trajectory,
    pub steps: Vec<StepResult>,
    /// Controls applied at each step, in control-grid coordinates.
    pub controls: Vec<Point>,
    pub solution: Option<DpSolution>,
}

/// Uniform step of a mission, required by every evaluator.
pub fn mission_dt(mission: &MissionProfile) -> Result<f64> {
    mission.dt().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "mission '{}' has a non-uniform time step; resample it first",
            mission.name
        ))
    })
}

fn engine_speed(step: &StepResult) -> f64 {
    step.engine.map_or(0.0, |p| p.speed)
}

fn build_report(
    plant: &Plant,
    mission: &MissionProfile,
    objective: Objective,
    dt: f64,
    steps: &[StepResult],
    soc_initial: f64,
) -> RunReport {
    let (mut fuel, mut nox, mut hc) = (0.0, 0.0, 0.0);
    for s in steps {
        fuel += s.fuel_rate * dt;
        nox += s.nox_rate * dt;
        hc += s.hc_rate * dt;
    }
    let duration = steps.len() as f64 * dt;
    let hybrid = plant.architecture().is_hybrid();
    let soc_final = if hybrid { steps.last().map_or(soc_initial, |s| s.soc_next) } else { soc_initial };
    let on = steps.iter().filter(|s| s.engine_on()).count();
    RunReport {
        architecture: plant.architecture(),
        mission: mission.name.clone(),
        cost_kind: objective.kind,
        mu: objective.mu,
        fuel_lph: fuel / duration * 3600.0 / DIESEL_DENSITY,
        nox_gph: nox / duration * 3.6e6,
        hc_gph: hc / duration * 3.6e6,
        dsoc: soc_final - soc_initial,
        soc_initial,
        soc_final,
        duration_s: duration,
        steps: steps.len(),
        engine_on_fraction: on as f64 / steps.len().max(1) as f64,
        objective: None,
        predicted: None,
    }
}

fn trajectory(
    plant: &Plant,
    mission: &MissionProfile,
    steps: &[StepResult],
    socs: &[f64],
    controls: &[Point],
) -> Trajectory {
    let control_names = match plant {
        Plant::Conventional(_) => vec![],
        Plant::Parallel(_) => vec!["alpha".to_string()],
        Plant::Series(_) => vec!["phi".to_string()],
    };
    let rows = steps
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let controls = match plant {
                Plant::Conventional(_) => vec![],
                Plant::Parallel(_) => vec![controls[k][0]],
                Plant::Series(p) => {
                    let i = s.battery_current;
                    let lim = if i >= 0.0 { p.battery.i_lim_dis } else { p.battery.i_lim_ch.abs() };
                    vec![i / lim]
                }
            };
            TrajectoryRow {
                k,
                t: mission.samples()[k].t,
                soc: socs[k],
                omega_eng: engine_speed(s),
                controls,
                fuel_rate: s.fuel_rate,
                nox_rate: s.nox_rate,
                hc_rate: s.hc_rate,
                p_b: s.battery_power,
            }
        })
        .collect();
    Trajectory { control_names, rows }
}

fn run_conventional(
    plant: &Plant,
    p: &crate::architectures::ConventionalPlant,
    mission: &MissionProfile,
    inputs: &[StepInput],
    objective: Objective,
    dt: f64,
) -> Result<RunOutput> {
    let mut steps = Vec::with_capacity(inputs.len());
    for (k, inp) in inputs.iter().enumerate() {
        let s = conventional_step(inp, p).map_err(|reason| Error::MissionInfeasible { step: k, reason })?;
        steps.push(s);
    }
    let report = build_report(plant, mission, objective, dt, &steps, 0.0);
    let socs = vec![f64::NAN; steps.len()];
    let controls = vec![Point::new(); steps.len()];
    Ok(RunOutput {
        trajectory: trajectory(plant, mission, &steps, &socs, &controls),
        report: RunReport { soc_initial: 0.0, soc_final: 0.0, ..report },
        controls,
        steps,
        solution: None,
    })
}

fn run_dp<M: DpModel<Info = StepResult>>(
    model: &M,
    plant: &Plant,
    mission: &MissionProfile,
    objective: Objective,
    dt: f64,
    x0: &[f64],
    keep_solution: bool,
) -> Result<RunOutput> {
    let solution = solve_backward(model)?;
    let r = rollout(model, &solution, x0)?;
    let socs: Vec<f64> = r.steps.iter().map(|s| s.state[0]).collect();
    let controls: Vec<Point> = r.steps.iter().map(|s| s.control.clone()).collect();
    let steps: Vec<StepResult> = r.steps.iter().map(|s| s.info).collect();
    let mut report = build_report(plant, mission, objective, dt, &steps, x0[0]);
    report.objective = Some(r.total_cost());
    report.predicted = Some(r.predicted);
    Ok(RunOutput {
        trajectory: trajectory(plant, mission, &steps, &socs, &controls),
        report,
        steps,
        controls,
        solution: keep_solution.then_some(solution),
    })
}

/// Runs one plant on a mission. The conventional plant is simulated
/// directly; hybrids are optimised by DP from `dp.soc_initial` with a
/// charge-sustaining terminal penalty.
pub fn run_architecture(
    plant: &Plant,
    mission: &MissionProfile,
    objective: Objective,
    dp: &DpConfig,
) -> Result<RunOutput> {
    run_detailed(plant, mission, objective, dp, false)
}

/// [`run_architecture`], optionally keeping the value field and policy.
pub fn run_detailed(
    plant: &Plant,
    mission: &MissionProfile,
    objective: Objective,
    dp: &DpConfig,
    keep_solution: bool,
) -> Result<RunOutput> {
    objective.validate()?;
    dp.validate()?;
    let dt = mission_dt(mission)?;
    let inputs = step_inputs(mission);
    match plant {
        Plant::Conventional(p) => run_conventional(plant, p, mission, &inputs, objective, dt),
        Plant::Parallel(p) => {
            let cost = CostSpec::for_engine(objective, &p.engine.maps)?;
            let model = ParallelModel::new(p, &inputs, dt, cost, dp)?;
            run_dp(&model, plant, mission, objective, dt, &[dp.soc_initial], keep_solution)
        }
        Plant::Series(p) => {
            let cost = CostSpec::for_engine(objective, &p.engine.maps)?;
            let model = SeriesModel::new(p, &inputs, dt, cost, dp)?;
            run_dp(&model, plant, mission, objective, dt, &[dp.soc_initial, 0.0], keep_solution)
        }
    }
}

/// One independent run per μ, in input order.
pub fn mu_sweep(
    plant: &Plant,
    mission: &MissionProfile,
    kind: CostKind,
    mus: &[f64],
    dp: &DpConfig,
) -> Vec<Result<RunOutput>> {
    mus.iter()
        .map(|&mu| {
            log::info!("sweep: {} mu = {mu}", plant.architecture());
            run_architecture(plant, mission, Objective { kind, mu }, dp)
        })
        .collect()
}

/// Runs every plant under one objective, in the order given.
pub fn compare_architectures(
    plants: &[Plant],
    mission: &MissionProfile,
    objective: Objective,
    dp: &DpConfig,
) -> Result<Vec<RunOutput>> {
    plants.iter().map(|p| run_architecture(p, mission, objective, dp)).collect()
}

/// Aligned text table of reports.
pub fn comparison_table(reports: &[RunReport]) -> String {
    let mut out = format!(
        "{:<13} {:<9} {:>5} {:>10} {:>10} {:>10} {:>9}\n",
        "architecture", "cost", "mu", "fuel l/h", "NOx g/h", "HC g/h", "dSOC"
    );
    for r in reports {
        out.push_str(&format!(
            "{:<13} {:<9} {:>5.2} {:>10.3} {:>10.3} {:>10.4} {:>9.5}\n",
            r.architecture.as_str(),
            r.cost_kind.as_str(),
            r.mu,
            r.fuel_lph,
            r.nox_gph,
            r.hc_gph,
            r.dsoc
        ));
    }
    out
}

/// Largest physical-balance residual over a run: torque balance for the
/// parallel plant, bus power balance for series steps with the engine on.
pub fn max_balance_residual(plant: &Plant, mission: &MissionProfile, out: &RunOutput) -> f64 {
    let inputs = step_inputs(mission);
    out.steps
        .iter()
        .zip(&inputs)
        .map(|(s, inp)| match plant {
            Plant::Parallel(p) => parallel_torque_residual(s, inp, p),
            Plant::Series(_) if s.engine_on() => series_power_residual(s),
            _ => 0.0,
        })
        .fold(0.0, f64::max)
}

/// Largest balance residual [`verify_run`] accepts.
pub const BALANCE_TOLERANCE: f64 = 1e-9;

/// Re-simulates the logged controls open loop from the initial state,
/// checks that states and rates reproduce the run and that the physical
/// balances close. Returns the largest balance residual.
pub fn verify_run(plant: &Plant, mission: &MissionProfile, out: &RunOutput, dp: &DpConfig) -> Result<f64> {
    let dt = mission_dt(mission)?;
    let inputs = step_inputs(mission);
    if out.steps.len() != inputs.len() || out.controls.len() != inputs.len() {
        return Err(Error::Verification("trajectory length does not match the mission".into()));
    }
    let mut soc = dp.soc_initial;
    let mut omega_prev = 0.0;
    for (k, inp) in inputs.iter().enumerate() {
        let u = &out.controls[k];
        let replay = match plant {
            Plant::Conventional(p) => conventional_step(inp, p),
            Plant::Parallel(p) => parallel_step(inp, soc, u[0], p, dt),
            Plant::Series(p) => series_demand(inp, p).and_then(|d| {
                if u[1] == 0.0 {
                    series_step_electric(&d, soc, p, dt)
                } else {
                    series_step_with_demand(&d, soc, omega_prev, u[0], u[1], p, dt)
                }
            }),
        }
        .map_err(|e| Error::Verification(format!("step {k} no longer feasible: {e}")))?;
        let logged = &out.steps[k];
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12);
        let pairs = [
            (replay.fuel_rate, logged.fuel_rate),
            (replay.nox_rate, logged.nox_rate),
            (replay.hc_rate, logged.hc_rate),
            (replay.battery_power, logged.battery_power),
            (replay.soc_next, logged.soc_next),
        ];
        if let Some((a, b)) = pairs.iter().find(|(a, b)| !close(*a, *b)) {
            return Err(Error::Verification(format!("step {k}: replay {a} vs logged {b}")));
        }
        if plant.architecture().is_hybrid() {
            soc = replay.soc_next;
        }
        omega_prev = engine_speed(&replay);
    }
    let residual = max_balance_residual(plant, mission, out);
    if !(residual < BALANCE_TOLERANCE) {
        return Err(Error::Verification(format!("balance residual {residual:e}")));
    }
    Ok(residual)
}

/// Stage costs of a run under `objective`, as the optimiser saw them.
pub fn stage_costs(plant: &Plant, out: &RunOutput, objective: Objective) -> Result<Vec<f64>> {
    let maps = match plant {
        Plant::Conventional(p) => &p.engine.maps,
        Plant::Parallel(p) => &p.engine.maps,
        Plant::Series(p) => &p.engine.maps,
    };
    let spec = CostSpec::for_engine(objective, maps)?;
    Ok(out.steps.iter().map(|s| stage_cost(s, &spec)).collect())
}
