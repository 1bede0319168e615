//! Split fluxes, one-sided local speeds and the central-upwind numerical flux.
//!
//! The same CU machinery serves two flux functions: the non-stiff part of the
//! split system (AP scheme) and the full unsplit flux (explicit baseline).

use crate::error::{Error, Result};
use crate::model::{pressure, pressure_derivative, EndKind, GasParameters, PipeState, State};
use crate::reconstruction::interface_states;

/// Below this spread of the local speeds the CU flux falls back to the mean.
pub const DEGENERATE_SPEED_GAP: f64 = 1e-12;

/// Slack allowed on `p'(rho) - a_n` before the radicand is declared negative.
pub const RADICAND_SLACK: f64 = 1e-14;

/// Splitting weight and global stiffness coefficient at the current time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitParams {
    pub alpha: f64,
    pub a_n: f64,
}

/// `alpha = min(1, eps^b)` and `a_n = min p'(rho)` over every cell and ghost of
/// the network.
pub fn stiffness_params(pipes: &[PipeState], params: &GasParameters) -> Result<SplitParams> {
    let mut rho_min = f64::INFINITY;
    for pipe in pipes {
        for &rho in pipe
            .rho
            .iter()
            .chain([pipe.ghost_left.rho, pipe.ghost_right.rho].iter())
        {
            if !(rho > crate::model::VACUUM_FLOOR) {
                return Err(Error::NonPositiveDensity { rho });
            }
            rho_min = rho_min.min(rho);
        }
    }
    // p' is increasing, so the minimum sits at the smallest density
    Ok(SplitParams {
        alpha: params.alpha(),
        a_n: pressure_derivative(rho_min, params)?,
    })
}

/// A flux function with real eigenvalues, usable inside the CU flux.
pub trait FluxFunction: Sync {
    fn flux(&self, u: State) -> Result<State>;
    /// Smallest and largest eigenvalue of the flux Jacobian at `u`.
    fn eigenvalues(&self, u: State) -> Result<(f64, f64)>;
}

/// Non-stiff part of the split flux.
#[derive(Debug, Clone, Copy)]
pub struct SplitFlux<'a> {
    pub split: SplitParams,
    pub params: &'a GasParameters,
    inv_eps_sq: f64,
}

impl<'a> SplitFlux<'a> {
    pub fn new(split: SplitParams, params: &'a GasParameters) -> Self {
        Self {
            split,
            params,
            inv_eps_sq: 1.0 / params.epsilon_sq(),
        }
    }

    /// `sqrt((1 - alpha) u^2 + alpha (p' - a_n) / eps^2)`.
    pub fn sound_part(&self, u: State) -> Result<f64> {
        let vel = u.velocity();
        let deficit = pressure_derivative(u.rho, self.params)? - self.split.a_n;
        if deficit < -RADICAND_SLACK {
            return Err(Error::NegativeRadicand { deficit });
        }
        let radicand = (1.0 - self.split.alpha) * vel * vel
            + self.split.alpha * deficit.max(0.0) * self.inv_eps_sq;
        Ok(radicand.sqrt())
    }
}

impl FluxFunction for SplitFlux<'_> {
    fn flux(&self, u: State) -> Result<State> {
        let p = pressure(u.rho, self.params)?;
        Ok(State::new(
            self.split.alpha * u.q,
            u.q * u.q / u.rho + (p - self.split.a_n * u.rho) * self.inv_eps_sq,
        ))
    }

    fn eigenvalues(&self, u: State) -> Result<(f64, f64)> {
        let c = self.sound_part(u)?;
        let vel = u.velocity();
        Ok((vel - c, vel + c))
    }
}

/// Unsplit physical flux `(q, q^2/rho + p/eps^2)`.
#[derive(Debug, Clone, Copy)]
pub struct FullFlux<'a> {
    pub params: &'a GasParameters,
}

impl FluxFunction for FullFlux<'_> {
    fn flux(&self, u: State) -> Result<State> {
        physical_flux(u, self.params)
    }

    fn eigenvalues(&self, u: State) -> Result<(f64, f64)> {
        let c = pressure_derivative(u.rho, self.params)?.sqrt() / self.params.epsilon;
        let vel = u.velocity();
        Ok((vel - c, vel + c))
    }
}

pub fn physical_flux(u: State, params: &GasParameters) -> Result<State> {
    let p = pressure(u.rho, params)?;
    Ok(State::new(u.q, u.q * u.q / u.rho + p / params.epsilon_sq()))
}

/// Fast (stiff) part of the split flux; used only in identity checks, the
/// stepper treats it implicitly.
pub fn fast_flux(u: State, split: &SplitParams, params: &GasParameters) -> State {
    State::new(
        (1.0 - split.alpha) * u.q,
        split.a_n * u.rho / params.epsilon_sq(),
    )
}

/// Friction source `(0, -C_delta kappa / (2 eps^2) rho u |u|)`.
pub fn friction_source(u: State, params: &GasParameters) -> State {
    State::new(0.0, -params.friction_coefficient() * u.q * u.velocity().abs())
}

pub fn slow_flux(u: State, split: &SplitParams, params: &GasParameters) -> Result<State> {
    SplitFlux::new(*split, params).flux(u)
}

/// One-sided speeds `(s_plus, s_minus)` of the non-stiff subsystem.
pub fn one_sided_speeds(
    minus: State,
    plus: State,
    split: &SplitParams,
    params: &GasParameters,
) -> Result<(f64, f64)> {
    local_speeds(&SplitFlux::new(*split, params), minus, plus)
}

pub fn local_speeds<F: FluxFunction + ?Sized>(model: &F, minus: State, plus: State) -> Result<(f64, f64)> {
    let (m_lo, m_hi) = model.eigenvalues(minus)?;
    let (p_lo, p_hi) = model.eigenvalues(plus)?;
    Ok((m_hi.max(p_hi).max(0.0), m_lo.min(p_lo).min(0.0)))
}

/// Central-upwind flux of `model` between the traces `minus` and `plus`.
pub fn cu_flux_with<F: FluxFunction + ?Sized>(model: &F, minus: State, plus: State) -> Result<State> {
    let (sp, sm) = local_speeds(model, minus, plus)?;
    let fm = model.flux(minus)?;
    let fp = model.flux(plus)?;
    let gap = sp - sm;
    if gap < DEGENERATE_SPEED_GAP {
        return Ok(0.5 * (fm + fp));
    }
    let inv = 1.0 / gap;
    let jump = plus - minus;
    Ok(State::new(
        (sp * fm.rho - sm * fp.rho) * inv + sp * sm * inv * jump.rho,
        (sp * fm.q - sm * fp.q) * inv + sp * sm * inv * jump.q,
    ))
}

pub fn cu_flux(
    minus: State,
    plus: State,
    split: &SplitParams,
    params: &GasParameters,
) -> Result<State> {
    cu_flux_with(&SplitFlux::new(*split, params), minus, plus)
}

/// Per-cell `-(F_{j+1/2} - F_{j-1/2}) / dx`, plus the two boundary fluxes.
#[derive(Debug, Clone, PartialEq)]
pub struct NonstiffResidual {
    pub rho: Vec<f64>,
    pub q: Vec<f64>,
    pub left_flux: State,
    pub right_flux: State,
}

/// CU residual of one pipe for an arbitrary flux function. Ghosts must be filled.
pub fn flux_residual<F: FluxFunction + ?Sized>(
    model: &F,
    pipe: &PipeState,
    theta: f64,
) -> Result<NonstiffResidual> {
    let n = pipe.n_cells();
    let mut traces = interface_states(
        &pipe.rho,
        &pipe.q,
        pipe.ghost_left,
        pipe.ghost_right,
        theta,
        pipe.dx,
    )?;
    if pipe.left == EndKind::Periodic || pipe.right == EndKind::Periodic {
        traces.minus[0] = traces.minus[n];
        traces.plus[n] = traces.plus[0];
    }
    // first-order reconstruction next to junctions
    if pipe.left == EndKind::Junction {
        traces.set_both(0, pipe.ghost_left);
    }
    if pipe.right == EndKind::Junction {
        traces.set_both(n, pipe.ghost_right);
    }

    let fluxes = traces
        .minus
        .iter()
        .zip(&traces.plus)
        .map(|(&m, &p)| cu_flux_with(model, m, p))
        .collect::<Result<Vec<_>>>()?;

    let inv_dx = 1.0 / pipe.dx;
    let (rho, q) = fluxes
        .windows(2)
        .map(|w| (-(w[1].rho - w[0].rho) * inv_dx, -(w[1].q - w[0].q) * inv_dx))
        .unzip();
    Ok(NonstiffResidual {
        rho,
        q,
        left_flux: fluxes[0],
        right_flux: fluxes[n],
    })
}

pub fn nonstiff_residual(
    pipe: &PipeState,
    split: &SplitParams,
    params: &GasParameters,
) -> Result<NonstiffResidual> {
    flux_residual(&SplitFlux::new(*split, params), pipe, params.theta)
}
