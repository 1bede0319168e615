//! Drivers behind the `run`, `converge` and `bench` subcommands.

use std::fs;

use log::info;
use serde::Serialize;

use super::config::RunConfig;
use super::output::{convergence_csv, write_json, write_snapshot, RunReport};
use crate::diagnostics::{convergence_table, ConvergenceRow};
use crate::error::{Error, Result};
use crate::model::PipeState;
use crate::network::Network;
use crate::simulation::{run, RunOutcome, Scheme};

/// Cell widths `1/10, 1/20, ..., 1/320`.
pub const DEFAULT_LADDER: [f64; 6] = [10.0, 20.0, 40.0, 80.0, 160.0, 320.0];

pub fn build_network(cfg: &RunConfig) -> Result<Network> {
    let mut net = Network::new(cfg.network_topology()?, cfg.params)?;
    net.parallel = cfg.threads > 1;
    Ok(net)
}

/// Run without touching the file system.
pub fn simulate(cfg: &RunConfig) -> Result<(Network, RunOutcome)> {
    let mut net = build_network(cfg)?;
    let outcome = run(&mut net, &cfg.run_options()?)?;
    Ok((net, outcome))
}

/// Run and write `snapshot_NNN.csv` files plus `report.json` to the output
/// directory.
pub fn run_simulation(cfg: &RunConfig) -> Result<RunReport> {
    let (net, outcome) = simulate(cfg)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut files = Vec::new();
    for (k, snap) in outcome.snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:03}.csv");
        write_snapshot(&cfg.output_dir.join(&name), &snap.pipes, &cfg.params)?;
        files.push(name);
    }
    let report = RunReport::new(cfg.scheme, cfg.params, net.total_cells(), &outcome, files);
    write_json(&cfg.output_dir.join("report.json"), &report)?;
    Ok(report)
}

/// Final states on each rung of `ladder` (inverse cell widths, coarse to fine).
pub fn ladder_solutions(cfg: &RunConfig, ladder: &[f64]) -> Result<Vec<Vec<PipeState>>> {
    let base = cfg.network_topology()?;
    ladder
        .iter()
        .map(|&inv_dx| {
            let mut topo = base.clone();
            for p in &mut topo.pipes {
                p.cells = (p.length * inv_dx).round() as usize;
            }
            let mut net = Network::new(topo, cfg.params)?;
            net.parallel = cfg.threads > 1;
            run(&mut net, &cfg.run_options()?)?;
            info!("finished dx = 1/{inv_dx}");
            Ok(net.pipes)
        })
        .collect()
}

pub fn run_convergence(cfg: &RunConfig, ladder: &[f64]) -> Result<Vec<ConvergenceRow>> {
    if ladder.len() < 2 {
        return Err(Error::InvalidParameter("the ladder needs at least two cell widths".into()));
    }
    let rows = convergence_table(&ladder_solutions(cfg, ladder)?)?;
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("convergence.csv"), convergence_csv(&rows))?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub epsilon: f64,
    pub total_cells: usize,
    pub final_time: f64,
    pub ap_steps: usize,
    pub ap_wall_time: f64,
    pub explicit_steps: usize,
    pub explicit_wall_time: f64,
    /// Explicit over AP wall time.
    pub ratio: f64,
}

/// The same setup under both schemes, timing only the time loops.
pub fn bench(cfg: &RunConfig) -> Result<BenchReport> {
    let timed = |scheme| -> Result<(usize, RunOutcome)> {
        let c = RunConfig { scheme, ..cfg.clone() };
        let (net, out) = simulate(&c)?;
        Ok((net.total_cells(), out))
    };
    let (total_cells, ap) = timed(Scheme::Ap)?;
    let (_, ex) = timed(Scheme::Explicit)?;
    let report = BenchReport {
        epsilon: cfg.params.epsilon,
        total_cells,
        final_time: cfg.resolved_final_time()?,
        ap_steps: ap.steps,
        ap_wall_time: ap.wall_time,
        explicit_steps: ex.steps,
        explicit_wall_time: ex.wall_time,
        ratio: ex.wall_time / ap.wall_time,
    };
    fs::create_dir_all(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join("bench.json"), &report)?;
    Ok(report)
}
