//! Time loop shared by both schemes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::ap_stepper::{network_step, BoundaryDerivative, StepReport};
use crate::diagnostics::{conservation_audit, ConservationAudit};
use crate::error::{Error, Result};
use crate::explicit_stepper::explicit_step;
use crate::model::PipeState;
use crate::network::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Ap,
    Explicit,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ap" => Ok(Scheme::Ap),
            "explicit" => Ok(Scheme::Explicit),
            other => Err(Error::InvalidParameter(format!(
                "unknown scheme `{other}` (expected ap or explicit)"
            ))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Ap => "ap",
            Scheme::Explicit => "explicit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub scheme: Scheme,
    pub final_time: f64,
    /// Step cap; defaults to the smallest cell width of the network.
    pub dt_max: Option<f64>,
    pub boundary_derivative: BoundaryDerivative,
    /// Extra output times in `[0, final_time]`; the final time is always kept.
    pub snapshot_times: Vec<f64>,
    /// Stop early after this many steps.
    pub max_steps: Option<usize>,
}

impl RunOptions {
    pub fn new(scheme: Scheme, final_time: f64) -> Self {
        Self {
            scheme,
            final_time,
            dt_max: None,
            boundary_derivative: BoundaryDerivative::AsPrinted,
            snapshot_times: vec![],
            max_steps: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub pipes: Vec<PipeState>,
}

/// Distribution of Newton iteration counts over all junction solves.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct NewtonStats {
    pub solves: usize,
    pub max_iterations: usize,
    pub median_iterations: f64,
    pub histogram: BTreeMap<usize, usize>,
    pub max_residual: f64,
}

impl NewtonStats {
    pub fn from_reports(reports: &[StepReport]) -> Self {
        let mut histogram = BTreeMap::new();
        let mut all: Vec<usize> = Vec::new();
        let mut max_residual: f64 = 0.0;
        for r in reports {
            for &it in &r.newton_iters {
                *histogram.entry(it).or_insert(0) += 1;
                all.push(it);
            }
            for &res in &r.junction_residuals {
                max_residual = max_residual.max(res);
            }
        }
        all.sort_unstable();
        let median_iterations = match all.len() {
            0 => 0.0,
            n if n % 2 == 1 => all[n / 2] as f64,
            n => 0.5 * (all[n / 2 - 1] + all[n / 2]) as f64,
        };
        Self {
            solves: all.len(),
            max_iterations: all.last().copied().unwrap_or(0),
            median_iterations,
            histogram,
            max_residual,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub steps: usize,
    /// Seconds spent in the time loop, excluding setup and output.
    pub wall_time: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub reports: Vec<StepReport>,
    pub newton: NewtonStats,
    pub audit: ConservationAudit,
    pub snapshots: Vec<Snapshot>,
}

/// Advance `net` to `opts.final_time`, landing exactly on every snapshot time.
pub fn run(net: &mut Network, opts: &RunOptions) -> Result<RunOutcome> {
    if !(opts.final_time > 0.0) {
        return Err(Error::InvalidParameter("final_time must be positive".into()));
    }
    let dt_max = opts.dt_max.unwrap_or_else(|| {
        net.pipes.iter().map(|p| p.dx).fold(f64::INFINITY, f64::min)
    });
    if !(dt_max > 0.0) {
        return Err(Error::InvalidParameter("dt_max must be positive".into()));
    }

    let mut stops: Vec<f64> = opts
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t >= net.time && t < opts.final_time)
        .collect();
    stops.push(opts.final_time);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let initial_mass = net.total_mass();
    let mut reports = Vec::new();
    let mut snapshots = Vec::new();
    let start = Instant::now();

    'outer: for &stop in &stops {
        while net.time < stop {
            if opts.max_steps.is_some_and(|m| reports.len() >= m) {
                break 'outer;
            }
            let remaining = stop - net.time;
            let mut cap = dt_max.min(remaining);
            // Split a remainder of one to two steps evenly instead of ending on a sliver.
            if let Some(last) = reports.last().map(|r: &StepReport| r.dt) {
                if remaining > last * (1.0 + 1e-9) && remaining < 2.0 * last {
                    cap = cap.min(0.5 * remaining);
                }
            }
            let report = match opts.scheme {
                Scheme::Ap => network_step(net, cap, opts.boundary_derivative)?,
                Scheme::Explicit => explicit_step(net, cap)?,
            };
            // Rounding in the accumulated time must not cost an extra sliver step.
            if report.dt >= remaining || stop - net.time <= 1e-10 * report.dt {
                net.time = stop;
            }
            debug!("t = {:.6e}, dt = {:.3e}", net.time, report.dt);
            reports.push(report);
        }
        snapshots.push(Snapshot {
            time: net.time,
            pipes: net.pipes.clone(),
        });
    }
    let wall_time = start.elapsed().as_secs_f64();
    info!(
        "{} steps with the {} scheme in {:.3} s",
        reports.len(),
        opts.scheme,
        wall_time
    );

    let (dt_min, dt_used_max) = reports.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| {
        (lo.min(r.dt), hi.max(r.dt))
    });
    Ok(RunOutcome {
        steps: reports.len(),
        wall_time,
        dt_min,
        dt_max: dt_used_max,
        newton: NewtonStats::from_reports(&reports),
        audit: conservation_audit(&reports, initial_mass, net.total_mass()),
        reports,
        snapshots,
    })
}
