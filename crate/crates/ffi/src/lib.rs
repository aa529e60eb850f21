//! C interface to `hvo-core`.
//!
//! Objects cross the boundary as opaque handles created by `hvo_*_new` or
//! `hvo_*_load` style functions and released with the matching `*_free`.
//! Every fallible call returns an [`HvoStatus`]; on failure the message is
//! available from [`hvo_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use hvo_core::architectures::{Architecture, Plant, PlantConfig};
use hvo_core::ems::{
    run_architecture, write_report_csv, write_report_json, write_trajectory_csv, CostKind, DpConfig,
    Objective, ReportRow, RunOutput,
};
use hvo_core::mission::{load_mission, synthesize_demo_mission, MissionProfile, MissionSpec};
use hvo_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Infeasible = 6,
    Verification = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvoArchitecture {
    Conventional = 0,
    Parallel = 1,
    Series = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvoCost {
    Emissions = 0,
    Fuel = 1,
}

/// DP grid sizes and the initial SOC; fill with [`hvo_grid_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HvoGrid {
    pub soc_nodes: usize,
    pub speed_nodes: usize,
    pub alpha_nodes: usize,
    pub phi_nodes: usize,
    pub soc_initial: f64,
}

/// Mission-average results of a run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HvoSummary {
    pub fuel_lph: f64,
    pub nox_gph: f64,
    pub hc_gph: f64,
    pub dsoc: f64,
    pub engine_on_fraction: f64,
    pub steps: usize,
}

pub struct HvoPlant(Plant);
pub struct HvoMission(MissionProfile);
pub struct HvoRun(RunOutput);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HvoStatus {
    match e {
        Error::Io { .. } => HvoStatus::Io,
        Error::Parse(_) => HvoStatus::Parse,
        Error::Validation(_) => HvoStatus::Validation,
        Error::InvalidArgument(_) | Error::OutOfRange { .. } => HvoStatus::InvalidArgument,
        Error::Verification(_) => HvoStatus::Verification,
        Error::MissionInfeasible { .. }
        | Error::AllInfeasible
        | Error::DeadEnd { .. }
        | Error::NoFeasibleRatio => HvoStatus::Infeasible,
    }
}

struct Fail(HvoStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(HvoStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HvoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HvoStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            HvoStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(HvoStatus::InvalidArgument, format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn out_arg<'a, T>(p: *mut *mut T, what: &str) -> Result<&'a mut *mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn architecture(a: HvoArchitecture) -> Architecture {
    match a {
        HvoArchitecture::Conventional => Architecture::Conventional,
        HvoArchitecture::Parallel => Architecture::Parallel,
        HvoArchitecture::Series => Architecture::Series,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next `hvo_*` call on the same thread.
#[no_mangle]
pub extern "C" fn hvo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hvo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn hvo_grid_default(out: *mut HvoGrid) -> HvoStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let d = DpConfig::default();
        *out = HvoGrid {
            soc_nodes: d.soc_nodes,
            speed_nodes: d.speed_nodes,
            alpha_nodes: d.alpha_nodes,
            phi_nodes: d.phi_nodes,
            soc_initial: d.soc_initial,
        };
        Ok(())
    })
}

/// Builds the plant shipped with the library for `arch`.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to free
/// with [`hvo_plant_free`].
#[no_mangle]
pub unsafe extern "C" fn hvo_plant_bundled(arch: HvoArchitecture, out: *mut *mut HvoPlant) -> HvoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let plant = PlantConfig::bundled(architecture(arch)).build()?;
        *out = Box::into_raw(Box::new(HvoPlant(plant)));
        Ok(())
    })
}

/// Loads and builds a plant from a JSON config file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hvo_plant_load(path: *const c_char, out: *mut *mut HvoPlant) -> HvoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = path_arg(path, "path")?;
        let plant = PlantConfig::load(&path)?.build()?;
        *out = Box::into_raw(Box::new(HvoPlant(plant)));
        Ok(())
    })
}

/// # Safety
/// `plant` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hvo_plant_free(plant: *mut HvoPlant) {
    if !plant.is_null() {
        drop(Box::from_raw(plant));
    }
}

/// Synthesises the demo mission with the given seed.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hvo_mission_demo(seed: u64, out: *mut *mut HvoMission) -> HvoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let m = synthesize_demo_mission(&MissionSpec { seed, ..MissionSpec::default() })?;
        *out = Box::into_raw(Box::new(HvoMission(m)));
        Ok(())
    })
}

/// Loads a mission CSV (`t,omega_prop,torque_prop[,segment]`).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hvo_mission_load(path: *const c_char, out: *mut *mut HvoMission) -> HvoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = path_arg(path, "path")?;
        let m = load_mission(&path)?;
        *out = Box::into_raw(Box::new(HvoMission(m)));
        Ok(())
    })
}

/// Number of samples, or 0 for NULL.
///
/// # Safety
/// `mission` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hvo_mission_len(mission: *const HvoMission) -> usize {
    mission.as_ref().map_or(0, |m| m.0.len())
}

/// # Safety
/// `mission` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hvo_mission_free(mission: *mut HvoMission) {
    if !mission.is_null() {
        drop(Box::from_raw(mission));
    }
}

/// Simulates (conventional) or optimises (hybrids) `plant` on `mission`.
/// `grid` may be NULL for the default grids; `mu` is ignored for fuel cost.
///
/// # Safety
/// `plant` and `mission` must be live handles, `grid` NULL or valid, and
/// `out` a valid pointer; on success it receives a handle to free with
/// [`hvo_run_free`].
#[no_mangle]
pub unsafe extern "C" fn hvo_run(
    plant: *const HvoPlant,
    mission: *const HvoMission,
    cost: HvoCost,
    mu: f64,
    grid: *const HvoGrid,
    out: *mut *mut HvoRun,
) -> HvoStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let plant = plant.as_ref().ok_or_else(|| null("plant"))?;
        let mission = mission.as_ref().ok_or_else(|| null("mission"))?;
        let mut dp = DpConfig::default();
        if let Some(g) = grid.as_ref() {
            dp.soc_nodes = g.soc_nodes;
            dp.speed_nodes = g.speed_nodes;
            dp.alpha_nodes = g.alpha_nodes;
            dp.phi_nodes = g.phi_nodes;
            dp.soc_initial = g.soc_initial;
        }
        let objective = match cost {
            HvoCost::Emissions => Objective { kind: CostKind::Emissions, mu },
            HvoCost::Fuel => Objective::fuel(),
        };
        let run = run_architecture(&plant.0, &mission.0, objective, &dp)?;
        *out = Box::into_raw(Box::new(HvoRun(run)));
        Ok(())
    })
}

/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hvo_run_summary(run: *const HvoRun, out: *mut HvoSummary) -> HvoStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = &run.0.report;
        *out = HvoSummary {
            fuel_lph: r.fuel_lph,
            nox_gph: r.nox_gph,
            hc_gph: r.hc_gph,
            dsoc: r.dsoc,
            engine_on_fraction: r.engine_on_fraction,
            steps: r.steps,
        };
        Ok(())
    })
}

/// Writes `report.json`, `report.csv` and `trajectory.csv` into `dir`,
/// creating it if needed.
///
/// # Safety
/// `run` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hvo_run_write(run: *const HvoRun, dir: *const c_char) -> HvoStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let dir = path_arg(dir, "dir")?;
        std::fs::create_dir_all(&dir).map_err(|e| io_fail(&dir, e))?;
        let report = &run.0.report;
        write_to(&dir.join("report.json"), |w| write_report_json(report, w))?;
        write_to(&dir.join("report.csv"), |w| write_report_csv(&[ReportRow::from(report)], w))?;
        write_to(&dir.join("trajectory.csv"), |w| write_trajectory_csv(&run.0.trajectory, w))?;
        Ok(())
    })
}

fn io_fail(path: &Path, e: std::io::Error) -> Fail {
    Fail(HvoStatus::Io, format!("I/O error on {}: {e}", path.display()))
}

fn write_to(
    path: &Path,
    f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> hvo_core::Result<()>,
) -> Result<(), Fail> {
    use std::io::Write;
    let file = std::fs::File::create(path).map_err(|e| io_fail(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|e| io_fail(path, e))
}

/// # Safety
/// `run` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hvo_run_free(run: *mut HvoRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
