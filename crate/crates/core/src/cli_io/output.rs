//! CSV snapshots, convergence tables and JSON run reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::{ConservationAudit, ConvergenceRow};
use crate::error::Result;
use crate::model::{pressure, GasParameters, PipeState};
use crate::simulation::{NewtonStats, RunOutcome, Scheme};

pub const SNAPSHOT_HEADER: &str = "pipe_id,x_center,rho,u,p";

/// One row per cell, pipes in index order. Floats use the shortest
/// round-tripping representation so reruns are byte-identical.
pub fn snapshot_csv(pipes: &[PipeState], params: &GasParameters) -> Result<String> {
    let mut out = String::from(SNAPSHOT_HEADER);
    out.push('\n');
    for (i, pipe) in pipes.iter().enumerate() {
        for j in 0..pipe.n_cells() {
            let rho = pipe.rho[j];
            let u = pipe.q[j] / rho;
            let p = pressure(rho, params)?;
            writeln!(out, "{i},{},{rho},{u},{p}", pipe.x_center(j)).expect("write to String");
        }
    }
    Ok(out)
}

pub fn write_snapshot(path: &Path, pipes: &[PipeState], params: &GasParameters) -> Result<()> {
    fs::write(path, snapshot_csv(pipes, params)?)?;
    Ok(())
}

pub const CONVERGENCE_HEADER: &str = "dx,l1_diff_rho,rate_rho,l1_diff_u,rate_u";

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let opt = |r: Option<f64>| r.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from(CONVERGENCE_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.dx,
            r.l1_diff_rho,
            opt(r.rate_rho),
            r.l1_diff_u,
            opt(r.rate_u)
        )
        .expect("write to String");
    }
    out
}

/// Summary written next to the snapshots as `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scheme: Scheme,
    pub params: GasParameters,
    pub final_time: f64,
    pub total_cells: usize,
    pub steps: usize,
    pub wall_time: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub newton: NewtonStats,
    pub audit: ConservationAudit,
    pub snapshots: Vec<SnapshotEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotEntry {
    pub time: f64,
    pub file: String,
}

impl RunReport {
    pub fn new(
        scheme: Scheme,
        params: GasParameters,
        total_cells: usize,
        outcome: &RunOutcome,
        files: Vec<String>,
    ) -> Self {
        let final_time = outcome.snapshots.last().map_or(0.0, |s| s.time);
        Self {
            scheme,
            params,
            final_time,
            total_cells,
            steps: outcome.steps,
            wall_time: outcome.wall_time,
            dt_min: outcome.dt_min,
            dt_max: outcome.dt_max,
            newton: outcome.newton.clone(),
            audit: outcome.audit,
            snapshots: outcome
                .snapshots
                .iter()
                .zip(files)
                .map(|(s, file)| SnapshotEntry { time: s.time, file })
                .collect(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
