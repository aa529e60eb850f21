//! The `hvo` command line.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 infeasible
//! mission or optimisation, 3 a sweep finished with failed rows.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::architectures::{optimize_transmission_ratio, Architecture, PlantConfig};
use crate::ems::{
    comparison_table, mu_sweep, run_architecture, verify_run, write_report_csv, write_report_json,
    write_sweep_csv, write_sweep_plot_csv, write_trajectory_csv, CostKind, DpConfig, Objective, ReportRow,
};
use crate::error::{Error, Result};
use crate::maps::{generate_em_map, generate_engine_maps, save_maps, EmSpec, EngineSpec, MapFile};
use crate::mission::{load_mission, save_mission, synthesize_demo_mission, MissionProfile, MissionSpec};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_SWEEP_FAILED: u8 = 3;

/// Demo mission shipped with the crate; identical to `synthmission` with
/// the default spec.
pub const BUNDLED_MISSION: &str = include_str!("../data/linea1_demo.csv");

#[derive(Debug, Parser)]
#[command(name = "hvo", version, about = "Hybrid waterbus powertrain optimisation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate or optimise one plant on a mission.
    Run(RunArgs),
    /// Repeat a hybrid run over a list of trade-off factors.
    Sweep(SweepArgs),
    /// Generate engine or e-machine maps from ratings.
    Genmaps(GenmapsArgs),
    /// Pick the propulsion gearbox ratio with the best mean motor efficiency.
    Optratio(OptratioArgs),
    /// Write the synthetic demo mission.
    Synthmission(SynthArgs),
}

#[derive(Debug, Args)]
pub struct PlantArgs {
    /// Plant config JSON; a bare architecture name selects the bundled one.
    #[arg(long, default_value = "series")]
    pub config: String,
    /// Mission CSV; the bundled demo mission when omitted.
    #[arg(long)]
    pub mission: Option<PathBuf>,
    /// Synthesise the demo mission with this seed instead of the bundled file.
    #[arg(long, conflicts_with = "mission")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub soc_nodes: Option<usize>,
    #[arg(long)]
    pub speed_nodes: Option<usize>,
    #[arg(long)]
    pub alpha_nodes: Option<usize>,
    #[arg(long)]
    pub phi_nodes: Option<usize>,
    /// Initial (and terminal target) SOC.
    #[arg(long)]
    pub soc0: Option<f64>,
    /// Worker threads for the DP solver.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub plant: PlantArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    #[arg(long, default_value = "emissions")]
    pub cost: String,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Re-simulate the logged controls open loop and check the trajectory
    /// and the physical balances.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub plant: PlantArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Comma-separated trade-off factors.
    #[arg(long, default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
    pub mu: String,
    #[arg(long, default_value = "emissions")]
    pub cost: String,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Verify every run as `run --verify` does; failures mark the row.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct GenmapsArgs {
    /// Ratings JSON: `{"engine": {...}}` or `{"emachine": {...}}`.
    #[arg(long, conflicts_with = "reference")]
    pub config: Option<PathBuf>,
    /// Use the reference 147 kW engine ratings.
    #[arg(long)]
    pub reference: bool,
    #[arg(long, default_value = "maps.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptratioArgs {
    /// Plant config providing the motor and gearbox losses.
    #[arg(long, default_value = "series")]
    pub config: String,
    #[arg(long)]
    pub mission: Option<PathBuf>,
    #[arg(long, default_value_t = 3.5)]
    pub min: f64,
    #[arg(long, default_value_t = 5.0)]
    pub max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long, default_value = "ratio.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Mission spec JSON; the default two-segment demo when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "linea1_demo.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EngineRatings {
    displacement_l: f64,
    rated_power_kw: f64,
    rated_speed_rpm: f64,
    peak_torque_nm: f64,
    peak_torque_speed_rpm: f64,
    idle_speed_rpm: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MachineRatings {
    rated_power_kw: f64,
    max_speed_rpm: f64,
    base_speed_rpm: f64,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RatingsFile {
    Engine(EngineRatings),
    Emachine(MachineRatings),
}

const RPM: f64 = std::f64::consts::PI / 30.0;

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    ExitCode::from(execute(cli.command))
}

pub fn execute(cmd: Command) -> u8 {
    let result = match cmd {
        Command::Run(a) => cmd_run(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Genmaps(a) => cmd_genmaps(&a),
        Command::Optratio(a) => cmd_optratio(&a),
        Command::Synthmission(a) => cmd_synthmission(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    if e.is_infeasibility() {
        EXIT_INFEASIBLE
    } else {
        EXIT_CONFIG
    }
}

fn load_plant_config(arg: &str) -> Result<PlantConfig> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Ok(arch) = arg.parse::<Architecture>() {
            return Ok(PlantConfig::bundled(arch));
        }
    }
    PlantConfig::load(path)
}

fn load_mission_arg(mission: Option<&Path>, seed: Option<u64>) -> Result<MissionProfile> {
    match (mission, seed) {
        (Some(p), _) => load_mission(p),
        (None, Some(seed)) => synthesize_demo_mission(&MissionSpec { seed, ..MissionSpec::default() }),
        (None, None) => crate::mission::read_mission(BUNDLED_MISSION.as_bytes(), "linea1_demo"),
    }
}

fn dp_config(g: &GridArgs) -> Result<DpConfig> {
    let mut dp = DpConfig::default();
    if let Some(n) = g.soc_nodes {
        dp.soc_nodes = n;
    }
    if let Some(n) = g.speed_nodes {
        dp.speed_nodes = n;
    }
    if let Some(n) = g.alpha_nodes {
        dp.alpha_nodes = n;
    }
    if let Some(n) = g.phi_nodes {
        dp.phi_nodes = n;
    }
    if let Some(s) = g.soc0 {
        dp.soc_initial = s;
    }
    dp.validate()?;
    for w in dp.coarseness_warnings() {
        eprintln!("warning: {w}");
    }
    Ok(dp)
}

fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    finish(w, path)
}

fn parse_cost(s: &str) -> Result<CostKind> {
    s.parse()
}

pub fn cmd_run(a: &RunArgs) -> Result<u8> {
    let cfg = load_plant_config(&a.plant.config)?;
    let plant = cfg.build()?;
    let mission = load_mission_arg(a.plant.mission.as_deref(), a.plant.seed)?;
    let dp = dp_config(&a.grid)?;
    let objective = Objective { kind: parse_cost(&a.cost)?, mu: a.mu };
    objective.validate()?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;

    let out = with_jobs(a.grid.jobs, || run_architecture(&plant, &mission, objective, &dp))??;
    if a.verify {
        let residual = verify_run(&plant, &mission, &out, &dp)?;
        eprintln!("verified: max balance residual {residual:e}");
    }
    write_file(&a.out.join("report.json"), |w| write_report_json(&out.report, w))?;
    let rows = [ReportRow::from(&out.report)];
    write_file(&a.out.join("report.csv"), |w| write_report_csv(&rows, w))?;
    write_file(&a.out.join("trajectory.csv"), |w| write_trajectory_csv(&out.trajectory, w))?;
    print!("{}", comparison_table(std::slice::from_ref(&out.report)));
    Ok(EXIT_OK)
}

pub fn parse_mu_list(s: &str) -> Result<Vec<f64>> {
    let mus: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| Error::InvalidArgument(format!("mu `{t}`: {e}"))))
        .collect::<Result<_>>()?;
    if mus.is_empty() {
        return Err(Error::InvalidArgument("empty mu list".into()));
    }
    if let Some(m) = mus.iter().find(|m| !(0.0..=1.0).contains(*m)) {
        return Err(Error::InvalidArgument(format!("mu {m} outside [0, 1]")));
    }
    Ok(mus)
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<u8> {
    let mus = parse_mu_list(&a.mu)?;
    let kind = parse_cost(&a.cost)?;
    let cfg = load_plant_config(&a.plant.config)?;
    let plant = cfg.build()?;
    let mission = load_mission_arg(a.plant.mission.as_deref(), a.plant.seed)?;
    let dp = dp_config(&a.grid)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;

    let mut results = with_jobs(a.grid.jobs, || mu_sweep(&plant, &mission, kind, &mus, &dp))?;
    if a.verify {
        for (r, mu) in results.iter_mut().zip(&mus) {
            if let Ok(out) = r {
                match verify_run(&plant, &mission, out, &dp) {
                    Ok(residual) => eprintln!("verified: mu = {mu}: max balance residual {residual:e}"),
                    Err(e) => *r = Err(e),
                }
            }
        }
    }
    let mut failed = 0;
    let rows: Vec<ReportRow> = results
        .iter()
        .zip(&mus)
        .map(|(r, &mu)| match r {
            Ok(out) => ReportRow::from(&out.report),
            Err(e) => {
                failed += 1;
                eprintln!("error: mu = {mu}: {e}");
                ReportRow::failed(cfg.architecture, kind, mu, &e.to_string())
            }
        })
        .collect();
    write_file(&a.out.join("sweep.csv"), |w| write_sweep_csv(&rows, w))?;
    write_file(&a.out.join("sweep_plot.csv"), |w| write_sweep_plot_csv(&rows, w))?;
    let reports: Vec<_> = results.iter().filter_map(|r| r.as_ref().ok()).map(|o| o.report.clone()).collect();
    print!("{}", comparison_table(&reports));
    Ok(if failed > 0 { EXIT_SWEEP_FAILED } else { EXIT_OK })
}

pub fn cmd_genmaps(a: &GenmapsArgs) -> Result<u8> {
    let ratings = match (&a.config, a.reference) {
        (_, true) => None,
        (Some(path), false) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let r: RatingsFile =
                serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            Some(r)
        }
        (None, false) => return Err(Error::InvalidArgument("genmaps needs --config or --reference".into())),
    };
    let file = match ratings {
        None => MapFile::Engine(generate_engine_maps(&EngineSpec::reference())?),
        Some(RatingsFile::Engine(r)) => MapFile::Engine(generate_engine_maps(&EngineSpec {
            displacement_l: r.displacement_l,
            rated_power: r.rated_power_kw * 1e3,
            omega_rated: r.rated_speed_rpm * RPM,
            torque_peak: r.peak_torque_nm,
            omega_torque_peak: r.peak_torque_speed_rpm * RPM,
            omega_idle: r.idle_speed_rpm * RPM,
        })?),
        Some(RatingsFile::Emachine(r)) => MapFile::Emachine(generate_em_map(&EmSpec::new(
            r.rated_power_kw * 1e3,
            r.max_speed_rpm * RPM,
            r.base_speed_rpm * RPM,
        ))?),
    };
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_maps(&file, &a.out)?;
    match &file {
        MapFile::Engine(m) => println!(
            "engine: rated power {:.1} kW, peak torque {:.1} N·m, BSFC at rated {:.1} g/kWh",
            m.envelope_max_power() / 1e3,
            m.peak_torque(),
            m.bsfc_at_rated()
        ),
        MapFile::Emachine(m) => {
            let (w, t, eta) = m.peak();
            println!(
                "e-machine: rated power {:.1} kW, peak torque {:.1} N·m, peak efficiency {:.3} at ({:.0} rad/s, {:.0} N·m)",
                m.rated_power / 1e3,
                m.torque_sup.eval(0.0),
                eta,
                w,
                t
            );
        }
    }
    Ok(EXIT_OK)
}

/// Candidate ratios from `min` to `max` inclusive in steps of `step`.
pub fn ratio_candidates(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && min > 0.0 && max >= min) {
        return Err(Error::InvalidArgument(format!("bad ratio range {min}..{max}")));
    }
    if min == max {
        return Ok(vec![min]);
    }
    if !(step > 0.0) {
        return Err(Error::InvalidArgument("ratio step must be positive".into()));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=n).map(|i| min + step * i as f64).collect();
    if (max - out[n]).abs() > 1e-9 {
        out.push(max);
    }
    Ok(out)
}

pub fn cmd_optratio(a: &OptratioArgs) -> Result<u8> {
    let cfg = load_plant_config(&a.config)?;
    let machine =
        cfg.motor.as_ref().or(cfg.emachine.as_ref()).ok_or_else(|| {
            Error::Validation(format!("{} plant has no electric machine", cfg.architecture))
        })?;
    let motor = machine.build_machine()?;
    let template = cfg.transmission.build()?;
    let mission = load_mission_arg(a.mission.as_deref(), None)?;
    let candidates = ratio_candidates(a.min, a.max, a.step)?;
    let sweep = optimize_transmission_ratio(&mission, &motor, &template, &candidates)?;
    write_file(&a.out, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["ratio", "mean_efficiency"])?;
        for (r, eta) in &sweep.table {
            out.write_record([r.to_string(), eta.map(|e| e.to_string()).unwrap_or_default()])?;
        }
        out.flush().map_err(|e| Error::Parse(e.to_string()))
    })?;
    println!("best ratio {}", sweep.best);
    Ok(EXIT_OK)
}

pub fn cmd_synthmission(a: &SynthArgs) -> Result<u8> {
    let mut spec = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<MissionSpec>(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        }
        None => MissionSpec::default(),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let mission = synthesize_demo_mission(&spec)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_mission(&mission, &a.out)?;
    println!("{} samples, {:.0} s", mission.len(), mission.duration());
    Ok(EXIT_OK)
}
