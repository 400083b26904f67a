//! Files written by a run: trace.csv, summary.json and the plot-data CSVs.

use std::fs;
use std::path::Path;

use ipad_core::framework::IterationRecord;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

/// One trace.csv row. The first nine columns are the headline telemetry; the
/// rest carry what a post-hoc audit needs to recheck the error test and the
/// descent inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub psi: f64,
    pub dx_rel: f64,
    pub dy_rel: f64,
    pub ex_norm: f64,
    pub ey_norm: f64,
    pub inner_x: usize,
    pub inner_y: usize,
    pub elapsed_s: f64,
    pub dx_norm: f64,
    pub dy_norm: f64,
    pub x_prev_norm: f64,
    pub y_prev_norm: f64,
    pub eta_x: f64,
    pub eta_y: f64,
    pub c_x: f64,
    pub c_y: f64,
    pub floor_x: f64,
    pub floor_y: f64,
    pub accepted_x: bool,
    pub accepted_y: bool,
    pub lipschitz: f64,
}

impl From<&IterationRecord> for TraceRow {
    fn from(r: &IterationRecord) -> Self {
        Self {
            t: r.t,
            psi: r.psi,
            dx_rel: r.dx_rel(),
            dy_rel: r.dy_rel(),
            ex_norm: r.ex_norm,
            ey_norm: r.ey_norm,
            inner_x: r.inner_x,
            inner_y: r.inner_y,
            elapsed_s: r.elapsed,
            dx_norm: r.dx_norm,
            dy_norm: r.dy_norm,
            x_prev_norm: r.x_prev_norm,
            y_prev_norm: r.y_prev_norm,
            eta_x: r.eta_x,
            eta_y: r.eta_y,
            c_x: r.c_x,
            c_y: r.c_y,
            floor_x: r.floor_x,
            floor_y: r.floor_y,
            accepted_x: r.accepted_x,
            accepted_y: r.accepted_y,
            lipschitz: r.lipschitz,
        }
    }
}

impl From<&TraceRow> for IterationRecord {
    fn from(r: &TraceRow) -> Self {
        IterationRecord {
            t: r.t,
            psi: r.psi,
            dx_norm: r.dx_norm,
            dy_norm: r.dy_norm,
            x_prev_norm: r.x_prev_norm,
            y_prev_norm: r.y_prev_norm,
            ex_norm: r.ex_norm,
            ey_norm: r.ey_norm,
            inner_x: r.inner_x,
            inner_y: r.inner_y,
            elapsed: r.elapsed_s,
            eta_x: r.eta_x,
            eta_y: r.eta_y,
            c_x: r.c_x,
            c_y: r.c_y,
            floor_x: r.floor_x,
            floor_y: r.floor_y,
            accepted_x: r.accepted_x,
            accepted_y: r.accepted_y,
            lipschitz: r.lipschitz,
        }
    }
}

pub fn trace_csv(trace: &[IterationRecord]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in trace {
        w.serialize(TraceRow::from(r))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn read_trace(path: &Path) -> Result<Vec<IterationRecord>, CliError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<TraceRow>() {
        out.push(IterationRecord::from(&row?));
    }
    Ok(out)
}

/// Relative change of the objective between consecutive records.
pub fn psi_change(prev: f64, cur: f64) -> f64 {
    ipad_core::framework::guarded_ratio((cur - prev).abs(), prev.abs())
}

/// Plot data: one `(file name, contents)` pair per panel.
pub fn plot_files(trace: &[IterationRecord]) -> Result<Vec<(&'static str, Vec<u8>)>, CliError> {
    let steps = || trace.iter().filter(|r| r.t > 0);
    let series = |header: &str, values: Vec<(usize, f64)>| -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", header])?;
        for (t, v) in values {
            w.serialize((t, v))?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    };
    let w_change = series("w_rel_change", steps().map(|r| (r.t, r.dx_rel())).collect())?;
    let d_change = series("d_rel_change", steps().map(|r| (r.t, r.dy_rel())).collect())?;
    let psi = series(
        "psi_rel_change",
        trace.windows(2).map(|p| (p[1].t, psi_change(p[0].psi, p[1].psi))).collect(),
    )?;
    let mut inner = csv::Writer::from_writer(Vec::new());
    inner.write_record(["t", "inner_x", "inner_y"])?;
    for r in steps() {
        inner.serialize((r.t, r.inner_x, r.inner_y))?;
    }
    let inner = inner.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(vec![
        ("plot_w_change.csv", w_change),
        ("plot_d_change.csv", d_change),
        ("plot_psi_change.csv", psi),
        ("plot_inner_counts.csv", inner),
    ])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub variant: String,
    pub mode: String,
    pub termination: String,
    pub outer_iterations: usize,
    pub inner_x_total: usize,
    pub inner_y_total: usize,
    /// Seconds spent in the solve; 0 when wall-clock recording is off.
    pub total_time_s: f64,
    pub final_psi: f64,
    pub psnr_noisy: Option<f64>,
    pub psnr_recovered: Option<f64>,
    pub criterion_violations: usize,
    pub exhausted_steps: usize,
    pub descent_violations: Option<usize>,
    pub descent_a: Option<f64>,
    pub seed: u64,
    pub config: RunConfig,
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}
