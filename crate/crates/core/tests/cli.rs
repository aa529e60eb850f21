use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hvo_core::ems::{read_report_csv, read_report_json, read_sweep_plot_csv, read_trajectory_csv};

fn hvo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hvo")).args(args).output().expect("hvo runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// The first `rows` samples of the bundled mission.
fn short_mission(dir: &Path, rows: usize) -> PathBuf {
    let text = hvo_core::cli::BUNDLED_MISSION;
    let head: Vec<&str> = text.lines().take(rows + 1).collect();
    let path = dir.join("short.csv");
    std::fs::write(&path, head.join("\n") + "\n").unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const COARSE: [&str; 8] =
    ["--soc-nodes", "51", "--speed-nodes", "9", "--alpha-nodes", "41", "--phi-nodes", "11"];

#[test]
fn run_conventional_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = hvo(&["run", "--config", "conventional", "--out", s(&out), "--verify"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("conventional"));
    assert!(stderr(&o).contains("verified: max balance residual 0e0"), "{}", stderr(&o));
    let report = read_report_json(std::fs::File::open(out.join("report.json")).unwrap()).unwrap();
    let rows = read_report_csv(std::fs::File::open(out.join("report.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].values.as_ref().unwrap().nox_gph, report.nox_gph);
    let tr = read_trajectory_csv(std::fs::File::open(out.join("trajectory.csv")).unwrap()).unwrap();
    assert_eq!(tr.rows.len(), report.steps);
}

#[test]
fn missing_mission_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.csv");
    let o = hvo(&["run", "--config", "conventional", "--mission", s(&missing), "--out", s(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("nowhere.csv"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_is_config_error() {
    assert_eq!(code(&hvo(&["run", "--bogus"])), 1);
    assert_eq!(code(&hvo(&["run", "--cost", "price", "--config", "conventional"])), 1);
}

#[test]
fn coarse_series_grid_warns_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mission = short_mission(dir.path(), 60);
    let out = dir.path().join("out");
    let o = hvo(&[
        "run",
        "--config",
        "series",
        "--mission",
        s(&mission),
        "--out",
        s(&out),
        "--soc-nodes",
        "2",
        "--speed-nodes",
        "9",
        "--phi-nodes",
        "11",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("warning: soc_nodes = 2"), "{}", stderr(&o));
    assert!(out.join("trajectory.csv").exists());
}

#[test]
fn infeasible_mission_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hard.csv");
    let mut text = String::from("t,omega_prop,torque_prop\n");
    for k in 0..20 {
        text.push_str(&format!("{k},50,20000\n"));
    }
    std::fs::write(&path, text).unwrap();
    let o = hvo(&["run", "--config", "conventional", "--mission", s(&path), "--out", s(dir.path())]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn sweep_rows_match_run() {
    let dir = tempfile::tempdir().unwrap();
    let mission = short_mission(dir.path(), 120);
    let run_out = dir.path().join("run");
    let sweep_out = dir.path().join("sweep");
    let mut args =
        vec!["run", "--config", "parallel", "--mission", s(&mission), "--mu", "0.3", "--out", s(&run_out)];
    args.extend(COARSE);
    let o = hvo(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut args = vec![
        "sweep",
        "--config",
        "parallel",
        "--mission",
        s(&mission),
        "--mu",
        "0.3",
        "--out",
        s(&sweep_out),
    ];
    args.extend(COARSE);
    let o = hvo(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let run_rows = read_report_csv(std::fs::File::open(run_out.join("report.csv")).unwrap()).unwrap();
    let sweep_rows = read_report_csv(std::fs::File::open(sweep_out.join("sweep.csv")).unwrap()).unwrap();
    assert_eq!(run_rows, sweep_rows);
    let plot = read_sweep_plot_csv(std::fs::File::open(sweep_out.join("sweep_plot.csv")).unwrap()).unwrap();
    let v = run_rows[0].values.as_ref().unwrap();
    assert_eq!(plot, vec![(0.3, v.nox_gph, v.hc_gph)]);
}

#[test]
fn sweep_writes_one_row_per_mu() {
    let dir = tempfile::tempdir().unwrap();
    let mission = short_mission(dir.path(), 60);
    let out = dir.path().join("sweep");
    let mut args = vec![
        "sweep",
        "--config",
        "series",
        "--mission",
        s(&mission),
        "--mu",
        "0,0.5,1",
        "--verify",
        "--out",
        s(&out),
    ];
    args.extend(COARSE);
    let o = hvo(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_report_csv(std::fs::File::open(out.join("sweep.csv")).unwrap()).unwrap();
    let mus: Vec<f64> = rows.iter().map(|r| r.mu).collect();
    assert_eq!(mus, vec![0.0, 0.5, 1.0]);
    assert!(rows.iter().all(|r| r.values.is_some() && r.error.is_none()));
    assert_eq!(stderr(&o).matches("verified: mu = ").count(), 3, "{}", stderr(&o));
}

#[test]
fn sweep_failures_are_annotated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hard.csv");
    let mut text = String::from("t,omega_prop,torque_prop\n");
    for k in 0..10 {
        text.push_str(&format!("{k},50,20000\n"));
    }
    std::fs::write(&path, text).unwrap();
    let out = dir.path().join("sweep");
    let mut args =
        vec!["sweep", "--config", "parallel", "--mission", s(&path), "--mu", "0,1", "--out", s(&out)];
    args.extend(COARSE);
    let o = hvo(&args);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let rows = read_report_csv(std::fs::File::open(out.join("sweep.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.values.is_none() && r.error.is_some()));
}

#[test]
fn empty_mu_list_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = hvo(&["sweep", "--config", "parallel", "--mu", "", "--out", s(dir.path())]);
    assert_eq!(code(&o), 1);
}

#[test]
fn genmaps_reference_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let o = hvo(&["genmaps", "--reference", "--out", s(&a)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let kw: f64 = text.split("rated power ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((kw - 147.0).abs() <= 1.47, "{text}");
    assert_eq!(code(&hvo(&["genmaps", "--reference", "--out", s(&b)])), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn genmaps_from_ratings() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("em.json");
    std::fs::write(
        &spec,
        r#"{"emachine": {"rated_power_kw": 100, "max_speed_rpm": 3000, "base_speed_rpm": 1500}}"#,
    )
    .unwrap();
    let o = hvo(&["genmaps", "--config", s(&spec), "--out", s(&dir.path().join("em_map.json"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("e-machine: rated power 100.0 kW"));

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"engine": {"displacement_l": -8.7, "rated_power_kw": 147, "rated_speed_rpm": 2000,
            "peak_torque_nm": 1200, "peak_torque_speed_rpm": 1100, "idle_speed_rpm": 600}}"#,
    )
    .unwrap();
    let o = hvo(&["genmaps", "--config", s(&bad), "--out", s(&dir.path().join("x.json"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn optratio_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ratio.csv");
    let o = hvo(&["optratio", "--min", "3.5", "--max", "5.0", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let best: f64 = stdout(&o).trim().strip_prefix("best ratio ").unwrap().parse().unwrap();
    assert!((3.5..=5.0).contains(&best));
    let table = std::fs::read_to_string(&out).unwrap();
    assert_eq!(table.lines().count(), 32);

    let o = hvo(&["optratio", "--min", "4.3", "--max", "4.3", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "best ratio 4.3");

    let o = hvo(&["optratio", "--min", "40", "--max", "60", "--step", "10", "--out", s(&out)]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn synthmission_matches_bundled() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let o = hvo(&["synthmission", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), hvo_core::cli::BUNDLED_MISSION);
    let other = dir.path().join("m7.csv");
    assert_eq!(code(&hvo(&["synthmission", "--seed", "7", "--out", s(&other)])), 0);
    assert_ne!(std::fs::read(&out).unwrap(), std::fs::read(&other).unwrap());
}

#[test]
fn artifacts_do_not_depend_on_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let mission = short_mission(dir.path(), 90);
    let mut outs = Vec::new();
    for jobs in ["1", "3"] {
        let out = dir.path().join(format!("j{jobs}"));
        let mut args =
            vec!["run", "--config", "series", "--mission", s(&mission), "--jobs", jobs, "--out", s(&out)];
        args.extend(COARSE);
        let o = hvo(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outs.push(out);
    }
    for f in ["report.json", "report.csv", "trajectory.csv"] {
        assert_eq!(std::fs::read(outs[0].join(f)).unwrap(), std::fs::read(outs[1].join(f)).unwrap(), "{f}");
    }
}
