//! Objectives and experiment drivers for the energy-management study.

mod cost;
mod io;
mod models;
mod run;

pub use cost::{stage_cost, CostKind, CostSpec, Objective};
pub use io::{
    read_report_csv, read_report_json, read_sweep_plot_csv, read_trajectory_csv, write_report_csv,
    write_report_json, write_sweep_csv, write_sweep_plot_csv, write_trajectory_csv, ReportRow, ReportValues,
};
pub use models::{DpConfig, ParallelModel, SeriesModel, MAX_GRID_NODES};
pub use run::{
    compare_architectures, comparison_table, max_balance_residual, mission_dt, mu_sweep, run_architecture,
    run_detailed, stage_costs, verify_run, RunOutput, RunReport, Trajectory, TrajectoryRow,
    BALANCE_TOLERANCE, DIESEL_DENSITY,
};
