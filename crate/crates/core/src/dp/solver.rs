use rayon::prelude::*;

use super::grid::{Grid, Point, INFEASIBLE};
use crate::error::{Error, Result};

/// Policy entry for states with no feasible control.
pub const NO_CONTROL: u32 = u32::MAX;

/// Result of applying one control from one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<I> {
    pub next: Point,
    pub cost: f64,
    pub info: I,
}

/// A finite-horizon optimal control problem on gridded states and controls.
///
/// Stage `k` runs from value layer `k` to layer `k + 1`; there are
/// `stages()` stages and `stages() + 1` value layers, the last one being the
/// terminal cost. `step` receives the control both as its flat index `c` in
/// the control grid and as coordinates `u`, and returns `None` for
/// infeasible pairs.
pub trait DpModel: Sync {
    type Info: Clone + Send;
    /// Per-stage data computed once and shared by all states of the stage.
    type Stage: Sync;

    fn stages(&self) -> usize;
    fn state_grid(&self) -> &Grid;
    fn control_grid(&self) -> &Grid;
    fn prepare(&self, k: usize) -> Self::Stage;
    fn step(
        &self,
        stage: &Self::Stage,
        k: usize,
        x: &[f64],
        c: usize,
        u: &[f64],
    ) -> Option<Transition<Self::Info>>;
    fn terminal_cost(&self, x: &[f64]) -> f64;

    /// Optional specialised backward update for stage `k`. Implementations
    /// fill `value` and `policy` for every state node from `next_value` and
    /// return `true`; they must agree with the generic recursion.
    fn backward_stage(
        &self,
        _stage: &Self::Stage,
        _k: usize,
        _next_value: &[f64],
        _value: &mut [f64],
        _policy: &mut [u32],
    ) -> bool {
        false
    }
}

/// Value field and policy over every stage.
#[derive(Debug, Clone, PartialEq)]
pub struct DpSolution {
    pub state_grid: Grid,
    pub control_grid: Grid,
    /// `stages + 1` layers of cost-to-go at the state nodes.
    pub values: Vec<Vec<f64>>,
    /// `stages` layers of optimal flat control indices.
    pub policy: Vec<Vec<u32>>,
}

impl DpSolution {
    pub fn stages(&self) -> usize {
        self.policy.len()
    }

    /// Interpolated cost-to-go at the first stage.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.state_grid.interp(&self.values[0], x)
    }
}

/// Best control at state `x` against the next value layer. Ties go to the
/// lowest flat control index.
fn best_control<M: DpModel>(
    model: &M,
    stage: &M::Stage,
    k: usize,
    x: &[f64],
    next_value: &[f64],
) -> (f64, u32) {
    let sgrid = model.state_grid();
    let cgrid = model.control_grid();
    let mut best = (INFEASIBLE, NO_CONTROL);
    for c in 0..cgrid.len() {
        let u = cgrid.point(c);
        let Some(t) = model.step(stage, k, x, c, &u) else {
            continue;
        };
        let v = t.cost + sgrid.interp(next_value, &t.next);
        if v < best.0 {
            best = (v, c as u32);
        }
    }
    best
}

/// Backward Bellman recursion over all stages.
pub fn solve_backward<M: DpModel>(model: &M) -> Result<DpSolution> {
    let n_stages = model.stages();
    let sgrid = model.state_grid();
    let n = sgrid.len();
    if n_stages == 0 {
        return Err(Error::InvalidArgument("a DP problem needs at least one stage".into()));
    }
    if model.control_grid().len() > NO_CONTROL as usize {
        return Err(Error::InvalidArgument("too many controls".into()));
    }

    let terminal: Vec<f64> = (0..n).map(|i| model.terminal_cost(&sgrid.point(i))).collect();
    let mut values = vec![Vec::new(); n_stages + 1];
    let mut policy = vec![Vec::new(); n_stages];
    values[n_stages] = terminal;

    let report_every = (n_stages / 10).max(1);
    for k in (0..n_stages).rev() {
        let stage = model.prepare(k);
        let next = &values[k + 1];
        let mut value = vec![INFEASIBLE; n];
        let mut pol = vec![NO_CONTROL; n];
        if !model.backward_stage(&stage, k, next, &mut value, &mut pol) {
            let rows: Vec<(f64, u32)> = (0..n)
                .into_par_iter()
                .map(|i| best_control(model, &stage, k, &sgrid.point(i), next))
                .collect();
            for (i, (v, c)) in rows.into_iter().enumerate() {
                value[i] = v;
                pol[i] = c;
            }
        }
        values[k] = value;
        policy[k] = pol;
        if k % report_every == 0 {
            log::debug!("backward pass: stage {k} of {n_stages}");
        }
    }

    if values[0].iter().all(|v| *v == INFEASIBLE) {
        return Err(Error::AllInfeasible);
    }
    Ok(DpSolution { state_grid: sgrid.clone(), control_grid: model.control_grid().clone(), values, policy })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutStep<I> {
    pub state: Point,
    pub control: Point,
    pub control_index: u32,
    pub cost: f64,
    pub info: I,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout<I> {
    pub steps: Vec<RolloutStep<I>>,
    pub final_state: Point,
    /// Sum of stage costs.
    pub running_cost: f64,
    pub terminal_cost: f64,
    /// Interpolated cost-to-go at the initial state.
    pub predicted: f64,
}

impl<I> Rollout<I> {
    pub fn total_cost(&self) -> f64 {
        self.running_cost + self.terminal_cost
    }
}

/// Forward pass from `x0`. Each stage re-optimises the control at the
/// actual state against the interpolated next value layer.
pub fn rollout<M: DpModel>(model: &M, solution: &DpSolution, x0: &[f64]) -> Result<Rollout<M::Info>> {
    let n_stages = model.stages();
    if solution.stages() != n_stages {
        return Err(Error::InvalidArgument("solution does not match the model horizon".into()));
    }
    let predicted = solution.value_at(x0);
    if predicted == INFEASIBLE {
        return Err(Error::AllInfeasible);
    }
    let sgrid = model.state_grid();
    let cgrid = model.control_grid();
    let mut x: Point = x0.iter().copied().collect();
    let mut steps = Vec::with_capacity(n_stages);
    let mut running = 0.0;
    for k in 0..n_stages {
        let stage = model.prepare(k);
        let next = &solution.values[k + 1];
        let best = (0..cgrid.len())
            .into_par_iter()
            .filter_map(|c| {
                let t = model.step(&stage, k, &x, c, &cgrid.point(c))?;
                let v = t.cost + sgrid.interp(next, &t.next);
                (v < INFEASIBLE).then_some((v, c, t))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let Some((_, c, t)) = best else {
            return Err(Error::DeadEnd { stage: k });
        };
        running += t.cost;
        steps.push(RolloutStep {
            state: x.clone(),
            control: cgrid.point(c),
            control_index: c as u32,
            cost: t.cost,
            info: t.info,
        });
        x = t.next;
    }
    let terminal_cost = model.terminal_cost(&x);
    Ok(Rollout { steps, final_state: x, running_cost: running, terminal_cost, predicted })
}

/// One-sided linear penalty on a terminal SOC deficit.
pub fn terminal_soc_penalty(soc_terminal: f64, soc_target: f64, weight: f64) -> f64 {
    weight * (soc_target - soc_terminal).max(0.0)
}
