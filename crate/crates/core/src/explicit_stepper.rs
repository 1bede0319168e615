//! Baseline: central-upwind fluxes of the unsplit system, forward Euler in time
//! and explicit friction.

use std::time::Instant;

use rayon::prelude::*;

use crate::ap_stepper::{commit, PipeAdvance, StepReport, SPEED_FLOOR};
use crate::error::{Error, Result};
use crate::flux::{flux_residual, friction_source, FullFlux};
use crate::model::{pressure_derivative, GasParameters, PipeState, State};
use crate::network::Network;

/// States beyond this magnitude count as a blow-up.
pub const BLOW_UP_BOUND: f64 = 1e10;

/// `nu dx / max(|u| + sqrt(p') / eps)` over every cell and ghost, capped by `dt_max`.
pub fn explicit_timestep(pipes: &[PipeState], params: &GasParameters, dt_max: f64) -> Result<f64> {
    let mut dt = dt_max;
    for pipe in pipes {
        let mut s_max: f64 = 0.0;
        for u in pipe
            .rho
            .iter()
            .zip(&pipe.q)
            .map(|(&r, &q)| State::new(r, q))
            .chain([pipe.ghost_left, pipe.ghost_right])
        {
            let c = pressure_derivative(u.rho, params)?.sqrt() / params.epsilon;
            s_max = s_max.max(u.velocity().abs() + c);
        }
        dt = dt.min(params.nu * pipe.dx / s_max.max(SPEED_FLOOR));
    }
    Ok(dt)
}

/// Forward Euler step of one pipe whose ghosts are filled.
pub fn explicit_pipe_step(
    index: usize,
    pipe: &PipeState,
    dt: f64,
    params: &GasParameters,
) -> Result<PipeAdvance> {
    let res = flux_residual(&FullFlux { params }, pipe, params.theta)?;
    let mut rho = Vec::with_capacity(pipe.n_cells());
    let mut q = Vec::with_capacity(pipe.n_cells());
    for j in 0..pipe.n_cells() {
        let s = friction_source(pipe.cell(j), params);
        let r = pipe.rho[j] + dt * res.rho[j];
        let m = pipe.q[j] + dt * (res.q[j] + s.q);
        if !(r.abs() <= BLOW_UP_BOUND && m.abs() <= BLOW_UP_BOUND) {
            return Err(Error::BlowUp {
                pipe: index,
                cell: j,
            });
        }
        rho.push(r);
        q.push(m);
    }
    Ok(PipeAdvance {
        rho,
        q,
        mass_inflow: dt * (res.left_flux.rho - res.right_flux.rho),
    })
}

/// One explicit step of the whole network with `dt <= dt_cap`.
pub fn explicit_step(net: &mut Network, dt_cap: f64) -> Result<StepReport> {
    let start = Instant::now();
    let solutions = net.fill_ghosts()?;
    let params = net.params;
    let dt = explicit_timestep(&net.pipes, &params, dt_cap)?;

    let step = |(i, pipe): (usize, &PipeState)| explicit_pipe_step(i, pipe, dt, &params);
    let advances = if net.parallel {
        net.pipes.par_iter().enumerate().map(step).collect::<Result<Vec<_>>>()?
    } else {
        net.pipes.iter().enumerate().map(step).collect::<Result<Vec<_>>>()?
    };

    let mut report = StepReport::from_junctions(net, &solutions);
    report.mass_flux_boundary = commit(net, advances, dt)?;
    report.dt = dt;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}
