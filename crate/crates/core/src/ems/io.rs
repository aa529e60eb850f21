//! Report, sweep and trajectory artifacts, with loaders for each.

use std::io::{Read, Write};

use super::cost::CostKind;
use super::run::{RunReport, Trajectory, TrajectoryRow};
use crate::architectures::Architecture;
use crate::error::{Error, Result};

pub fn write_report_json(report: &RunReport, mut w: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, report)?;
    w.write_all(b"\n").map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_report_json(r: impl Read) -> Result<RunReport> {
    Ok(serde_json::from_reader(r)?)
}

/// One line of `report.csv` or `sweep.csv`. Failed sweep rows carry only
/// the identifying fields and an error message.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub architecture: Architecture,
    pub cost_kind: CostKind,
    pub mu: f64,
    pub values: Option<ReportValues>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportValues {
    pub fuel_lph: f64,
    pub nox_gph: f64,
    pub hc_gph: f64,
    pub dsoc: f64,
}

impl From<&RunReport> for ReportRow {
    fn from(r: &RunReport) -> Self {
        Self {
            architecture: r.architecture,
            cost_kind: r.cost_kind,
            mu: r.mu,
            values: Some(ReportValues {
                fuel_lph: r.fuel_lph,
                nox_gph: r.nox_gph,
                hc_gph: r.hc_gph,
                dsoc: r.dsoc,
            }),
            error: None,
        }
    }
}

impl ReportRow {
    pub fn failed(architecture: Architecture, cost_kind: CostKind, mu: f64, error: &str) -> Self {
        Self { architecture, cost_kind, mu, values: None, error: Some(error.to_string()) }
    }

    fn fields(&self) -> Vec<String> {
        let mut f = vec![self.architecture.to_string(), self.cost_kind.to_string(), self.mu.to_string()];
        match &self.values {
            Some(v) => f.extend([v.fuel_lph, v.nox_gph, v.hc_gph, v.dsoc].map(|x| x.to_string())),
            None => f.extend(std::iter::repeat_n(String::new(), 4)),
        }
        f
    }
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

/// Header plus one row per report.
pub fn write_report_csv(rows: &[ReportRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RunReport::CSV_HEADER)?;
    for r in rows {
        out.write_record(r.fields())?;
    }
    out.flush().map_err(csv_err)
}

/// Like [`write_report_csv`] with a trailing `error` column.
pub fn write_sweep_csv(rows: &[ReportRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = RunReport::CSV_HEADER.to_vec();
    header.push("error");
    out.write_record(header)?;
    for r in rows {
        let mut f = r.fields();
        f.push(r.error.clone().unwrap_or_default());
        out.write_record(f)?;
    }
    out.flush().map_err(csv_err)
}

/// Reads rows written by [`write_report_csv`] or [`write_sweep_csv`].
pub fn read_report_csv(r: impl Read) -> Result<Vec<ReportRow>> {
    let mut rd = csv::ReaderBuilder::new().flexible(false).from_reader(r);
    let header = rd.headers()?.clone();
    let expected = RunReport::CSV_HEADER;
    let with_error = header.len() == expected.len() + 1 && &header[expected.len()] == "error";
    if header.iter().take(expected.len()).ne(expected.iter().copied())
        || !(header.len() == expected.len() || with_error)
    {
        return Err(Error::Parse(format!("unexpected report header: {header:?}")));
    }
    let num = |s: &str, name: &str| -> Result<f64> {
        s.parse().map_err(|_| Error::Parse(format!("bad {name} value '{s}'")))
    };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let error = if with_error && !rec[7].is_empty() { Some(rec[7].to_string()) } else { None };
        let values = if rec[3].is_empty() {
            None
        } else {
            Some(ReportValues {
                fuel_lph: num(&rec[3], "fuel_lph")?,
                nox_gph: num(&rec[4], "nox_gph")?,
                hc_gph: num(&rec[5], "hc_gph")?,
                dsoc: num(&rec[6], "dsoc")?,
            })
        };
        rows.push(ReportRow {
            architecture: rec[0].parse()?,
            cost_kind: rec[1].parse()?,
            mu: num(&rec[2], "mu")?,
            values,
            error,
        });
    }
    Ok(rows)
}

/// `mu,nox_gph,hc_gph` for the successful rows of a sweep.
pub fn write_sweep_plot_csv(rows: &[ReportRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["mu", "nox_gph", "hc_gph"])?;
    for r in rows {
        if let Some(v) = &r.values {
            out.write_record([r.mu.to_string(), v.nox_gph.to_string(), v.hc_gph.to_string()])?;
        }
    }
    out.flush().map_err(csv_err)
}

pub fn read_sweep_plot_csv(r: impl Read) -> Result<Vec<(f64, f64, f64)>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| rec[i].parse::<f64>().map_err(csv_err);
        out.push((f(0)?, f(1)?, f(2)?));
    }
    Ok(out)
}

const TRAJECTORY_LEAD: [&str; 4] = ["k", "t", "soc", "omega_eng"];
const TRAJECTORY_TAIL: [&str; 4] = ["fuel_rate", "nox_rate", "hc_rate", "P_b"];

pub fn write_trajectory_csv(tr: &Trajectory, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = TRAJECTORY_LEAD.to_vec();
    header.extend(tr.control_names.iter().map(String::as_str));
    header.extend(TRAJECTORY_TAIL);
    out.write_record(&header)?;
    for r in &tr.rows {
        let mut f = vec![r.k.to_string(), r.t.to_string(), r.soc.to_string(), r.omega_eng.to_string()];
        f.extend(r.controls.iter().map(f64::to_string));
        f.extend([r.fuel_rate, r.nox_rate, r.hc_rate, r.p_b].map(|x| x.to_string()));
        out.write_record(f)?;
    }
    out.flush().map_err(csv_err)
}

pub fn read_trajectory_csv(r: impl Read) -> Result<Trajectory> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let n = header.len();
    if n < 8 || header.iter().take(4).ne(TRAJECTORY_LEAD) || header.iter().skip(n - 4).ne(TRAJECTORY_TAIL) {
        return Err(Error::Parse(format!("unexpected trajectory header: {header:?}")));
    }
    let control_names: Vec<String> = header.iter().skip(4).take(n - 8).map(String::from).collect();
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| rec[i].parse::<f64>().map_err(csv_err);
        rows.push(TrajectoryRow {
            k: rec[0].parse().map_err(csv_err)?,
            t: f(1)?,
            soc: f(2)?,
            omega_eng: f(3)?,
            controls: (4..n - 4).map(f).collect::<Result<_>>()?,
            fuel_rate: f(n - 4)?,
            nox_rate: f(n - 3)?,
            hc_rate: f(n - 2)?,
            p_b: f(n - 1)?,
        });
    }
    Ok(Trajectory { control_names, rows })
}
