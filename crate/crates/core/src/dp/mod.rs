//! Deterministic dynamic programming on gridded state and control spaces.

mod cache;
mod grid;
mod solver;

pub use cache::{load_solution, read_solution, save_solution, write_solution, CACHE_MAGIC};
pub use grid::{blend, interp_1d, Grid, Point, INFEASIBLE, MAX_DIMS};
pub use solver::{
    rollout, solve_backward, terminal_soc_penalty, DpModel, DpSolution, Rollout, RolloutStep, Transition,
    NO_CONTROL,
};
