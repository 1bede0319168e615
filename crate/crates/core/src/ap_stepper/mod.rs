//! Flux-split IMEX step: explicit central-upwind transport of the slow flux,
//! an implicit elliptic solve for the density and a friction-implicit momentum
//! update.

pub mod tridiagonal;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use tridiagonal::{solve_tridiagonal, TridiagonalSystem};

use crate::error::{Error, Result};
use crate::flux::{nonstiff_residual, stiffness_params, NonstiffResidual, SplitFlux, SplitParams};
use crate::junction::JunctionSolution;
use crate::model::{EndKind, GasParameters, PipeState, State};
use crate::network::Network;

/// Lower bound on the network-wide speed used in the CFL quotient.
pub const SPEED_FLOOR: f64 = 1e-12;

/// Prefactor of the one-sided boundary differences of `R^q / Psi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryDerivative {
    /// `1/dx`, with the cell residual extrapolated into the ghost.
    #[default]
    AsPrinted,
    /// `1/(2 dx)`, the same weight as the interior central difference.
    Centered,
}

/// Friction factor `1 + dt C_delta kappa |u| / (2 eps^2)`.
pub fn psi(u: f64, dt: f64, params: &GasParameters) -> f64 {
    1.0 + dt * params.friction_coefficient() * u.abs()
}

/// Interface value of `1/Psi`.
pub fn phi_half(psi_left: f64, psi_right: f64) -> f64 {
    0.5 * (1.0 / psi_left + 1.0 / psi_right)
}

/// How the implicit density is closed beyond one pipe end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityClosure {
    /// Ghost density held at this value (inlet or junction state).
    Fixed(f64),
    /// Ghost density equals the adjacent new cell density.
    Copy,
    /// Ghost density is the new density at the opposite end.
    Wrap,
}

impl DensityClosure {
    pub fn of(kind: EndKind, ghost: State) -> Self {
        match kind {
            EndKind::Junction | EndKind::Dirichlet(_) => DensityClosure::Fixed(ghost.rho),
            EndKind::ZeroGradient => DensityClosure::Copy,
            EndKind::Periodic => DensityClosure::Wrap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityBoundary {
    pub left: DensityClosure,
    pub right: DensityClosure,
}

impl DensityBoundary {
    pub fn of(pipe: &PipeState) -> Self {
        Self {
            left: DensityClosure::of(pipe.left, pipe.ghost_left),
            right: DensityClosure::of(pipe.right, pipe.ghost_right),
        }
    }

    /// New densities extended by one ghost on each side.
    pub fn extend(&self, rho: &[f64]) -> Vec<f64> {
        let n = rho.len();
        let ghost = |c: DensityClosure, near: f64, far: f64| match c {
            DensityClosure::Fixed(g) => g,
            DensityClosure::Copy => near,
            DensityClosure::Wrap => far,
        };
        let mut ext = Vec::with_capacity(n + 2);
        ext.push(ghost(self.left, rho[0], rho[n - 1]));
        ext.extend_from_slice(rho);
        ext.push(ghost(self.right, rho[n - 1], rho[0]));
        ext
    }
}

/// `Psi` at the left ghost, every cell and the right ghost.
pub fn friction_factors(pipe: &PipeState, dt: f64, params: &GasParameters) -> Vec<f64> {
    let mut out = Vec::with_capacity(pipe.n_cells() + 2);
    out.push(psi(pipe.ghost_left.velocity(), dt, params));
    out.extend(
        pipe.rho
            .iter()
            .zip(&pipe.q)
            .map(|(&r, &q)| psi(q / r, dt, params)),
    );
    out.push(psi(pipe.ghost_right.velocity(), dt, params));
    out
}

/// `phi` at the `N + 1` interfaces from extended friction factors.
pub fn interface_phi(psi_ext: &[f64]) -> Vec<f64> {
    psi_ext.windows(2).map(|w| phi_half(w[0], w[1])).collect()
}

/// Central difference `D_x [(q + dt R^q) / Psi]` per cell. Non-periodic
/// boundary cells extrapolate the residual into the ghost.
pub fn momentum_divergence(
    pipe: &PipeState,
    residual_q: &[f64],
    psi_ext: &[f64],
    dt: f64,
    variant: BoundaryDerivative,
) -> Vec<f64> {
    let n = pipe.n_cells();
    let dx = pipe.dx;
    let q_part: Vec<f64> = std::iter::once(pipe.ghost_left.q)
        .chain(pipe.q.iter().copied())
        .chain(std::iter::once(pipe.ghost_right.q))
        .zip(psi_ext)
        .map(|(q, p)| q / p)
        .collect();
    let r_part = |j: usize| residual_q[j] / psi_ext[j + 1];
    let periodic = pipe.left == EndKind::Periodic;
    let k = match variant {
        BoundaryDerivative::AsPrinted => 1.0 / dx,
        BoundaryDerivative::Centered => 0.5 / dx,
    };

    (0..n)
        .map(|j| {
            let dq = (q_part[j + 2] - q_part[j]) / (2.0 * dx);
            let dr = if periodic || (j > 0 && j + 1 < n) {
                let right = r_part((j + 1) % n);
                let left = r_part((j + n - 1) % n);
                (right - left) / (2.0 * dx)
            } else if j == 0 {
                (r_part(1) - residual_q[0] / psi_ext[0]) * k
            } else {
                (residual_q[n - 1] / psi_ext[n + 1] - r_part(n - 2)) * k
            };
            dq + dt * dr
        })
        .collect()
}

/// Coefficient `dt^2 a_n (1 - alpha) / (dx^2 eps^2)` of the implicit Laplacian.
pub fn implicit_coefficient(dt: f64, dx: f64, split: &SplitParams, params: &GasParameters) -> f64 {
    dt * dt * split.a_n * (1.0 - split.alpha) / (dx * dx * params.epsilon_sq())
}

/// The operator `I - c L_phi` with the boundary closures applied and a zero rhs.
pub fn density_operator(phi: &[f64], c: f64, boundary: DensityBoundary) -> TridiagonalSystem {
    let n = phi.len() - 1;
    let mut sys = TridiagonalSystem::new(n);
    for j in 0..n {
        sys.sub[j] = -c * phi[j];
        sys.sup[j] = -c * phi[j + 1];
        sys.diag[j] = 1.0 + c * (phi[j] + phi[j + 1]);
    }
    match boundary.left {
        DensityClosure::Fixed(_) => sys.sub[0] = 0.0,
        DensityClosure::Copy => {
            sys.diag[0] -= c * phi[0];
            sys.sub[0] = 0.0;
        }
        DensityClosure::Wrap => sys.cyclic = true,
    }
    match boundary.right {
        DensityClosure::Fixed(_) => sys.sup[n - 1] = 0.0,
        DensityClosure::Copy => {
            sys.diag[n - 1] -= c * phi[n];
            sys.sup[n - 1] = 0.0;
        }
        DensityClosure::Wrap => sys.cyclic = true,
    }
    sys
}

/// `phi+ (rho_{j+1} - rho_j) - phi- (rho_j - rho_{j-1})` with ghost densities
/// from the closures; a copy closure drops its flux.
pub fn weighted_laplacian(rho: &[f64], phi: &[f64], boundary: DensityBoundary) -> Vec<f64> {
    let n = rho.len();
    let ext = boundary.extend(rho);
    let flux = |i: usize| phi[i] * (ext[i + 1] - ext[i]);
    (0..n)
        .map(|j| {
            let right = if j + 1 == n && boundary.right == DensityClosure::Copy {
                0.0
            } else {
                flux(j + 1)
            };
            let left = if j == 0 && boundary.left == DensityClosure::Copy {
                0.0
            } else {
                flux(j)
            };
            right - left
        })
        .collect()
}

/// Everything a pipe's implicit solve needs, evaluated at `t^n`.
#[derive(Debug, Clone)]
pub struct DensityTerms {
    pub psi_ext: Vec<f64>,
    pub phi: Vec<f64>,
    pub c: f64,
    pub boundary: DensityBoundary,
    /// `dt R^rho - dt (1 - alpha) D_x w` per cell.
    pub explicit: Vec<f64>,
    pub divergence: Vec<f64>,
}

pub fn density_terms(
    pipe: &PipeState,
    residual: &NonstiffResidual,
    split: &SplitParams,
    dt: f64,
    params: &GasParameters,
    variant: BoundaryDerivative,
) -> DensityTerms {
    let psi_ext = friction_factors(pipe, dt, params);
    let phi = interface_phi(&psi_ext);
    let divergence = momentum_divergence(pipe, &residual.q, &psi_ext, dt, variant);
    let explicit = residual
        .rho
        .iter()
        .zip(&divergence)
        .map(|(r, d)| dt * r - dt * (1.0 - split.alpha) * d)
        .collect();
    DensityTerms {
        c: implicit_coefficient(dt, pipe.dx, split, params),
        boundary: DensityBoundary::of(pipe),
        psi_ext,
        phi,
        explicit,
        divergence,
    }
}

/// The density system in its textbook form: the solution is `rho^{n+1}`.
pub fn assemble_density_system(
    pipe: &PipeState,
    residual: &NonstiffResidual,
    split: &SplitParams,
    dt: f64,
    params: &GasParameters,
    variant: BoundaryDerivative,
) -> Result<TridiagonalSystem> {
    let t = density_terms(pipe, residual, split, dt, params, variant);
    let n = pipe.n_cells();
    let mut sys = density_operator(&t.phi, t.c, t.boundary);
    for j in 0..n {
        sys.rhs[j] = pipe.rho[j] + t.explicit[j];
    }
    if let DensityClosure::Fixed(g) = t.boundary.left {
        sys.rhs[0] += t.c * t.phi[0] * g;
    }
    if let DensityClosure::Fixed(g) = t.boundary.right {
        sys.rhs[n - 1] += t.c * t.phi[n] * g;
    }
    sys.check_dominance()?;
    Ok(sys)
}

/// The same system for the increment `rho^{n+1} - rho^n`. Its right-hand side
/// vanishes identically on steady states, so those are kept to the last bit.
pub fn assemble_density_increment(pipe: &PipeState, t: &DensityTerms) -> Result<TridiagonalSystem> {
    let mut sys = density_operator(&t.phi, t.c, t.boundary);
    let lap = weighted_laplacian(&pipe.rho, &t.phi, t.boundary);
    for (j, rhs) in sys.rhs.iter_mut().enumerate() {
        *rhs = t.explicit[j] + t.c * lap[j];
    }
    sys.check_dominance()?;
    Ok(sys)
}

/// `q^{n+1} = [q^n + dt R^q - (a_n dt / eps^2) D_x rho^{n+1}] / Psi`.
/// `rho_new_ext` carries one ghost on each side.
pub fn momentum_update(
    pipe: &PipeState,
    residual_q: &[f64],
    rho_new_ext: &[f64],
    psi_ext: &[f64],
    split: &SplitParams,
    dt: f64,
    params: &GasParameters,
) -> Vec<f64> {
    let scale = split.a_n * dt / params.epsilon_sq() / (2.0 * pipe.dx);
    (0..pipe.n_cells())
        .map(|j| {
            let grad = rho_new_ext[j + 2] - rho_new_ext[j];
            (pipe.q[j] + dt * residual_q[j] - scale * grad) / psi_ext[j + 1]
        })
        .collect()
}

/// CFL step `min(nu dx / S_max, dt_max)` over every cell and ghost.
pub fn ap_timestep(
    pipes: &[PipeState],
    split: &SplitParams,
    params: &GasParameters,
    dt_max: f64,
) -> Result<f64> {
    let model = SplitFlux::new(*split, params);
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
            s_max = s_max.max(u.velocity().abs() + model.sound_part(u)?);
        }
        dt = dt.min(params.nu * pipe.dx / s_max.max(SPEED_FLOOR));
    }
    Ok(dt)
}

/// New cell values of one pipe and the mass it received through its ends.
#[derive(Debug, Clone)]
pub struct PipeAdvance {
    pub rho: Vec<f64>,
    pub q: Vec<f64>,
    pub mass_inflow: f64,
}

/// One AP step of a single pipe whose ghosts are filled.
pub fn ap_pipe_step(
    pipe: &PipeState,
    split: &SplitParams,
    dt: f64,
    params: &GasParameters,
    variant: BoundaryDerivative,
) -> Result<PipeAdvance> {
    let residual = nonstiff_residual(pipe, split, params)?;
    let terms = density_terms(pipe, &residual, split, dt, params, variant);
    let sys = assemble_density_increment(pipe, &terms)?;
    let delta = solve_tridiagonal(&sys)?;
    let rho: Vec<f64> = pipe.rho.iter().zip(&delta).map(|(r, d)| r + d).collect();
    let rho_ext = terms.boundary.extend(&rho);
    let q = momentum_update(pipe, &residual.q, &rho_ext, &terms.psi_ext, split, dt, params);

    // Mass budget from boundary quantities only: the transport flux, the
    // explicit fast-flux divergence and the implicit flux through fixed ends.
    let n = pipe.n_cells();
    let dx = pipe.dx;
    let (c, phi) = (terms.c, &terms.phi);
    let fixed_flux = |closure: DensityClosure, i: usize, cell: usize| match closure {
        DensityClosure::Fixed(g) => c * phi[i] * (g - rho[cell]),
        _ => 0.0,
    };
    let implicit = fixed_flux(terms.boundary.left, 0, 0) + fixed_flux(terms.boundary.right, n, n - 1);
    let divergence: f64 = terms.divergence.iter().sum();
    let mass_inflow = dt * (residual.left_flux.rho - residual.right_flux.rho)
        - dt * (1.0 - split.alpha) * dx * divergence
        + dx * implicit;

    Ok(PipeAdvance {
        rho,
        q,
        mass_inflow,
    })
}

/// Outcome of one network step.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct StepReport {
    pub dt: f64,
    pub newton_iters: Vec<usize>,
    pub junction_residuals: Vec<f64>,
    /// `|sum_in q* - sum_out q*|` per junction.
    pub junction_momentum_balance: Vec<f64>,
    /// Net mass entering the network through pipe ends during the step.
    pub mass_flux_boundary: f64,
    pub wall_time: f64,
}

impl StepReport {
    pub fn from_junctions(net: &Network, solutions: &[JunctionSolution]) -> Self {
        let balance = solutions
            .iter()
            .zip(&net.topology.junctions)
            .map(|(s, spec)| {
                let m = spec.ingoing.len();
                let inflow: f64 = s.states[..m].iter().map(|u| u.q).sum();
                let outflow: f64 = s.states[m..].iter().map(|u| u.q).sum();
                (inflow - outflow).abs()
            })
            .collect();
        Self {
            newton_iters: solutions.iter().map(|s| s.iterations).collect(),
            junction_residuals: solutions.iter().map(|s| s.residual_norm).collect(),
            junction_momentum_balance: balance,
            ..Self::default()
        }
    }
}

/// Install per-pipe results, advance the clock and check admissibility.
pub(crate) fn commit(net: &mut Network, advances: Vec<PipeAdvance>, dt: f64) -> Result<f64> {
    let mut inflow = 0.0;
    for (pipe, adv) in net.pipes.iter_mut().zip(advances) {
        pipe.rho = adv.rho;
        pipe.q = adv.q;
        inflow += adv.mass_inflow;
        for &rho in &pipe.rho {
            if !(rho > crate::model::VACUUM_FLOOR) {
                return Err(Error::NonPositiveDensity { rho });
            }
        }
    }
    net.time += dt;
    Ok(inflow)
}

/// One AP step of the whole network with `dt <= dt_cap`.
pub fn network_step(
    net: &mut Network,
    dt_cap: f64,
    variant: BoundaryDerivative,
) -> Result<StepReport> {
    let start = Instant::now();
    let solutions = net.fill_ghosts()?;
    let params = net.params;
    let split = stiffness_params(&net.pipes, &params)?;
    let dt = ap_timestep(&net.pipes, &split, &params, dt_cap)?;

    let step = |pipe: &PipeState| ap_pipe_step(pipe, &split, dt, &params, variant);
    let advances = if net.parallel {
        net.pipes.par_iter().map(step).collect::<Result<Vec<_>>>()?
    } else {
        net.pipes.iter().map(step).collect::<Result<Vec<_>>>()?
    };

    let mut report = StepReport::from_junctions(net, &solutions);
    report.mass_flux_boundary = commit(net, advances, dt)?;
    report.dt = dt;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}
