//! Junction coupling through half-Riemann problems.
//!
//! Every incident pipe contributes one unknown density `rho*`. Its momentum
//! `q*` follows from the Lax curve that connects `rho*` to the cell value next
//! to the junction, and the densities are fixed by momentum conservation plus
//! one closure relation per additional pipe. The resulting small nonlinear
//! system is solved by Newton's method with a finite-difference Jacobian.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{
    pressure, pressure_derivative, CouplingCondition, GasParameters, JunctionSpec, PipeEnd, State,
    SumConvention,
};

/// Iterates that leave the admissible set are clipped to this density once.
pub const CLIP_DENSITY: f64 = 1e-10;

/// Shared wave term of both Lax curves.
///
/// Negative on the rarefaction branch (`rho < rho_hat`), positive on the shock
/// branch (`rho > rho_hat`) and zero at `rho_hat`; the curves are
/// `(rho / rho_hat) q_hat -+ wave_term / eps`.
pub fn wave_term(rho: f64, rho_hat: f64, params: &GasParameters) -> Result<f64> {
    if rho < rho_hat {
        let root = pressure_derivative(rho, params)?.sqrt();
        let root_hat = pressure_derivative(rho_hat, params)?.sqrt();
        Ok(2.0 / (params.gamma - 1.0) * rho * (root - root_hat))
    } else if rho > rho_hat {
        let dp = pressure(rho, params)? - pressure(rho_hat, params)?;
        Ok((rho / rho_hat * (rho - rho_hat) * dp).sqrt())
    } else {
        pressure(rho, params)?;
        Ok(0.0)
    }
}

/// Forward 1-Lax curve through `(rho_hat, q_hat)`.
pub fn lax1_forward(rho: f64, rho_hat: f64, q_hat: f64, params: &GasParameters) -> Result<f64> {
    Ok(rho / rho_hat * q_hat - wave_term(rho, rho_hat, params)? / params.epsilon)
}

/// Reversed 2-Lax curve through `(rho_hat, q_hat)`.
pub fn lax2_backward(rho: f64, rho_hat: f64, q_hat: f64, params: &GasParameters) -> Result<f64> {
    Ok(rho / rho_hat * q_hat + wave_term(rho, rho_hat, params)? / params.epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Junction at the pipe's right end.
    Ingoing,
    /// Junction at the pipe's left end.
    Outgoing,
}

/// Cell values next to a junction, ingoing pipes first.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceData {
    pub states: Vec<State>,
    pub n_ingoing: usize,
}

impl TraceData {
    pub fn new(ingoing: Vec<State>, outgoing: Vec<State>) -> Self {
        let n_ingoing = ingoing.len();
        let mut states = ingoing;
        states.extend(outgoing);
        Self { states, n_ingoing }
    }

    pub fn orientation(&self, k: usize) -> Orientation {
        if k < self.n_ingoing {
            Orientation::Ingoing
        } else {
            Orientation::Outgoing
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Indices of traces with `|u| > sqrt(p')/eps`.
    pub fn supersonic(&self, params: &GasParameters) -> Vec<usize> {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| {
                let c = pressure_derivative(s.rho, params)
                    .map(|d| d.sqrt() / params.epsilon)
                    .unwrap_or(0.0);
                s.velocity().abs() > c
            })
            .map(|(k, _)| k)
            .collect()
    }
}

/// Momentum at the junction side of pipe `k` for the candidate density `rho_star`.
///
/// The far state of the half-Riemann problem is the trace itself, so the inner
/// forward curve evaluates back to the trace momentum.
pub fn star_momentum(
    rho_star: f64,
    trace: State,
    orientation: Orientation,
    convention: SumConvention,
    params: &GasParameters,
) -> Result<f64> {
    let far = trace;
    match (convention, orientation) {
        (SumConvention::Oriented, Orientation::Ingoing) => {
            // local coordinates point away from the junction
            let inner = lax1_forward(trace.rho, far.rho, -far.q, params)?;
            Ok(-lax2_backward(rho_star, trace.rho, inner, params)?)
        }
        _ => {
            let inner = lax1_forward(trace.rho, far.rho, far.q, params)?;
            lax2_backward(rho_star, trace.rho, inner, params)
        }
    }
}

fn star_momenta(
    rho_star: &[f64],
    traces: &TraceData,
    spec: &JunctionSpec,
    params: &GasParameters,
) -> Result<Vec<f64>> {
    rho_star
        .iter()
        .zip(&traces.states)
        .enumerate()
        .map(|(k, (&r, &t))| star_momentum(r, t, traces.orientation(k), spec.sum_convention, params))
        .collect()
}

/// Ingoing/outgoing index pairs carrying the closure relations: the first
/// ingoing pipe against every outgoing pipe, then every further ingoing pipe
/// against the first outgoing one.
fn closure_pairs(n_in: usize, n_out: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n_out)
        .map(|l| (0, l))
        .chain((1..n_in).map(|k| (k, 0)))
}

/// Residual of the coupling system: momentum balance first, then `K - 1`
/// closure relations (pressure-like ones scaled by `eps^2`).
pub fn coupling_residual(
    rho_star: &[f64],
    traces: &TraceData,
    spec: &JunctionSpec,
    params: &GasParameters,
) -> Result<Vec<f64>> {
    let q = star_momenta(rho_star, traces, spec, params)?;
    residual_from(rho_star, &q, traces, spec, params)
}

fn residual_from(
    rho_star: &[f64],
    q: &[f64],
    traces: &TraceData,
    spec: &JunctionSpec,
    params: &GasParameters,
) -> Result<Vec<f64>> {
    let m = traces.n_ingoing;
    let n_out = traces.len() - m;
    let mut res = Vec::with_capacity(traces.len());
    res.push(match spec.sum_convention {
        SumConvention::Oriented => q[..m].iter().sum::<f64>() - q[m..].iter().sum::<f64>(),
        SumConvention::Verbatim => q.iter().sum::<f64>(),
    });

    let eps2 = params.epsilon_sq();
    let p = rho_star
        .iter()
        .map(|&r| pressure(r, params))
        .collect::<Result<Vec<_>>>()?;
    for (k, l) in closure_pairs(m, n_out) {
        let (a, b) = (k, m + l);
        res.push(match &spec.condition {
            CouplingCondition::EqualPressure => p[a] - p[b],
            CouplingCondition::EqualMomentum => {
                let flux = |i: usize| eps2 * q[i] * q[i] / rho_star[i] + p[i];
                flux(a) - flux(b)
            }
            CouplingCondition::PressureLoss(h) => p[a] - p[b] + eps2 * h[k][l],
        });
    }
    Ok(res)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Starred states of a solved junction, in trace order.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionSolution {
    pub states: Vec<State>,
    pub iterations: usize,
    pub residual_norm: f64,
}

pub fn solve_junction(
    traces: &TraceData,
    spec: &JunctionSpec,
    params: &GasParameters,
) -> Result<JunctionSolution> {
    solve_junction_indexed(0, traces, spec, params)
}

/// Newton solve from the initial guess `rho* = rho^n`; `junction` only labels errors.
pub fn solve_junction_indexed(
    junction: usize,
    traces: &TraceData,
    spec: &JunctionSpec,
    params: &GasParameters,
) -> Result<JunctionSolution> {
    let fast = traces.supersonic(params);
    if !fast.is_empty() {
        warn!("junction {junction}: supersonic traces at positions {fast:?}");
    }

    let k = traces.len();
    let mut rho: Vec<f64> = traces.states.iter().map(|s| s.rho).collect();
    let mut res = coupling_residual(&rho, traces, spec, params)?;
    let mut norm = inf_norm(&res);
    let mut iterations = 0;
    let mut clipped = false;

    while norm > spec.newton_tol {
        if iterations >= spec.newton_max_iter || !norm.is_finite() {
            return Err(Error::JunctionNewtonFailure {
                junction,
                iterations,
                residual: norm,
            });
        }
        let mut jac = DMatrix::<f64>::zeros(k, k);
        for col in 0..k {
            let h = 1e-7 * rho[col].abs().max(1.0);
            let mut shifted = rho.clone();
            shifted[col] += h;
            let r = coupling_residual(&shifted, traces, spec, params)?;
            for row in 0..k {
                jac[(row, col)] = (r[row] - res[row]) / h;
            }
        }
        let rhs = -DVector::from_vec(res.clone());
        let step = jac.lu().solve(&rhs).ok_or(Error::JunctionNewtonFailure {
            junction,
            iterations,
            residual: norm,
        })?;
        for (r, d) in rho.iter_mut().zip(step.iter()) {
            *r += d;
        }
        if rho.iter().any(|&r| !(r >= CLIP_DENSITY)) {
            if clipped {
                let worst = rho.iter().cloned().fold(f64::INFINITY, f64::min);
                return Err(Error::NonPositiveDensity { rho: worst });
            }
            clipped = true;
            for r in rho.iter_mut() {
                if !(*r >= CLIP_DENSITY) {
                    *r = CLIP_DENSITY;
                }
            }
        }
        iterations += 1;
        res = coupling_residual(&rho, traces, spec, params)?;
        norm = inf_norm(&res);
    }

    let q = star_momenta(&rho, traces, spec, params)?;
    Ok(JunctionSolution {
        states: rho.into_iter().zip(q).map(|(r, q)| State::new(r, q)).collect(),
        iterations,
        residual_norm: norm,
    })
}

/// Ghost value for one pipe end. The boundary interface of that end takes the
/// same state on both sides (first-order reconstruction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhostAssignment {
    pub pipe: usize,
    pub end: PipeEnd,
    pub state: State,
}

impl GhostAssignment {
    pub fn interface_override(&self) -> (State, State) {
        (self.state, self.state)
    }
}

pub fn ghost_states(solution: &JunctionSolution, spec: &JunctionSpec) -> Vec<GhostAssignment> {
    let ends = spec
        .ingoing
        .iter()
        .map(|&p| (p, PipeEnd::Right))
        .chain(spec.outgoing.iter().map(|&p| (p, PipeEnd::Left)));
    ends.zip(&solution.states)
        .map(|((pipe, end), &state)| GhostAssignment { pipe, end, state })
        .collect()
}
