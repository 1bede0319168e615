//! Piecewise-linear reconstruction with the generalized minmod limiter.

use crate::error::{Error, Result};
use crate::model::{State, VACUUM_FLOOR};

/// Smallest argument if all are positive, largest if all are negative, else zero.
pub fn minmod(z1: f64, z2: f64, z3: f64) -> f64 {
    if z1 > 0.0 && z2 > 0.0 && z3 > 0.0 {
        z1.min(z2).min(z3)
    } else if z1 < 0.0 && z2 < 0.0 && z3 < 0.0 {
        z1.max(z2).max(z3)
    } else {
        0.0
    }
}

/// Limited slopes of one field. `ghosts` are the outside neighbours of the
/// first and last cell.
pub fn slopes(field: &[f64], ghosts: (f64, f64), theta: f64, dx: f64) -> Vec<f64> {
    let n = field.len();
    let at = |j: isize| -> f64 {
        if j < 0 {
            ghosts.0
        } else if j as usize >= n {
            ghosts.1
        } else {
            field[j as usize]
        }
    };
    (0..n as isize)
        .map(|j| {
            let (l, c, r) = (at(j - 1), at(j), at(j + 1));
            minmod(
                theta * (r - c) / dx,
                (r - l) / (2.0 * dx),
                theta * (c - l) / dx,
            )
        })
        .collect()
}

/// One-sided values at the `N + 1` interfaces of a pipe.
///
/// Interface `i` sits between cells `i - 1` and `i`; interface 0 is the left
/// boundary and interface `N` the right one. At the two boundary interfaces the
/// outside trace is the (constant) ghost value.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceStates {
    pub minus: Vec<State>,
    pub plus: Vec<State>,
}

impl InterfaceStates {
    pub fn len(&self) -> usize {
        self.minus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minus.is_empty()
    }

    pub fn set_both(&mut self, interface: usize, state: State) {
        self.minus[interface] = state;
        self.plus[interface] = state;
    }

    pub fn check_vacuum(&self) -> Result<()> {
        for (i, (m, p)) in self.minus.iter().zip(&self.plus).enumerate() {
            for rho in [m.rho, p.rho] {
                if !(rho > VACUUM_FLOOR) {
                    return Err(Error::ReconstructedVacuum { interface: i, rho });
                }
            }
        }
        Ok(())
    }
}

/// Scalar interface values `(minus, plus)` for a field with precomputed slopes.
pub fn scalar_interface_values(
    field: &[f64],
    ghosts: (f64, f64),
    slopes: &[f64],
    dx: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = field.len();
    let mut minus = Vec::with_capacity(n + 1);
    let mut plus = Vec::with_capacity(n + 1);
    minus.push(ghosts.0);
    for j in 0..n {
        minus.push(field[j] + 0.5 * dx * slopes[j]);
        plus.push(field[j] - 0.5 * dx * slopes[j]);
    }
    plus.push(ghosts.1);
    (minus, plus)
}

/// Reconstruct `(rho, q)` componentwise and return the interface traces.
pub fn interface_states(
    rho: &[f64],
    q: &[f64],
    ghost_left: State,
    ghost_right: State,
    theta: f64,
    dx: f64,
) -> Result<InterfaceStates> {
    let rho_ghosts = (ghost_left.rho, ghost_right.rho);
    let q_ghosts = (ghost_left.q, ghost_right.q);
    let rho_slopes = slopes(rho, rho_ghosts, theta, dx);
    let q_slopes = slopes(q, q_ghosts, theta, dx);
    let (rm, rp) = scalar_interface_values(rho, rho_ghosts, &rho_slopes, dx);
    let (qm, qp) = scalar_interface_values(q, q_ghosts, &q_slopes, dx);
    let states = InterfaceStates {
        minus: rm.into_iter().zip(qm).map(|(r, q)| State::new(r, q)).collect(),
        plus: rp.into_iter().zip(qp).map(|(r, q)| State::new(r, q)).collect(),
    };
    states.check_vacuum()?;
    Ok(states)
}
