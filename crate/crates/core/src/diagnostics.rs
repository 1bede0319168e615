//! Norms, experimental convergence rates, the low-Mach residual and
//! conservation audits.

use serde::Serialize;

use crate::ap_stepper::StepReport;
use crate::error::{Error, Result};
use crate::model::{pressure, GasParameters, PipeState};

/// L1 distances of density and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L1Pair {
    pub rho: f64,
    pub u: f64,
}

/// Distance between a solution and its 2x refinement: fine cell pairs are
/// averaged onto the coarse grid, then `sum |diff| dx_coarse`, summed over pipes.
pub fn l1_difference(fine: &[PipeState], coarse: &[PipeState]) -> Result<L1Pair> {
    if fine.len() != coarse.len() {
        return Err(Error::GridMismatch(format!(
            "{} fine pipes vs {} coarse pipes",
            fine.len(),
            coarse.len()
        )));
    }
    let mut total = L1Pair { rho: 0.0, u: 0.0 };
    for (i, (f, c)) in fine.iter().zip(coarse).enumerate() {
        let n = c.n_cells();
        let matches = f.n_cells() == 2 * n && ((f.dx * 2.0 - c.dx).abs() <= 1e-12 * c.dx);
        if !matches {
            return Err(Error::GridMismatch(format!(
                "pipe {i}: {} fine cells of width {} do not refine {} cells of width {}",
                f.n_cells(),
                f.dx,
                n,
                c.dx
            )));
        }
        for j in 0..n {
            let rho_f = 0.5 * (f.rho[2 * j] + f.rho[2 * j + 1]);
            let u_f = 0.5 * (f.q[2 * j] / f.rho[2 * j] + f.q[2 * j + 1] / f.rho[2 * j + 1]);
            total.rho += (rho_f - c.rho[j]).abs() * c.dx;
            total.u += (u_f - c.q[j] / c.rho[j]).abs() * c.dx;
        }
    }
    Ok(total)
}

/// `log2(coarse / fine)`.
pub fn runge_rate(diff_coarse: f64, diff_fine: f64) -> Result<f64> {
    if !(diff_coarse > 0.0 && diff_fine > 0.0) {
        return Err(Error::NonPositiveDifference {
            coarse: diff_coarse,
            fine: diff_fine,
        });
    }
    Ok((diff_coarse / diff_fine).log2())
}

/// Row of a convergence table: the difference between the solution at `dx`
/// and the one at `dx / 2`, with the rate against the previous row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub dx: f64,
    pub l1_diff_rho: f64,
    pub rate_rho: Option<f64>,
    pub l1_diff_u: f64,
    pub rate_u: Option<f64>,
}

/// Build the table from solutions ordered coarse to fine, each a 2x refinement
/// of the previous one. Yields one row fewer than there are solutions.
pub fn convergence_table(solutions: &[Vec<PipeState>]) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for pair in solutions.windows(2) {
        let d = l1_difference(&pair[1], &pair[0])?;
        let (rate_rho, rate_u) = match rows.last() {
            Some(prev) => (
                Some(runge_rate(prev.l1_diff_rho, d.rho)?),
                Some(runge_rate(prev.l1_diff_u, d.u)?),
            ),
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            dx: pair[0][0].dx,
            l1_diff_rho: d.rho,
            rate_rho,
            l1_diff_u: d.u,
            rate_u,
        });
    }
    Ok(rows)
}

/// L1 norm over interior cells of `D_x p(rho) + (C_delta kappa / 2) rho u |u|`,
/// the balance that holds in the low-Mach, high-friction limit.
pub fn ap_residual(pipes: &[PipeState], params: &GasParameters) -> Result<f64> {
    let k = 0.5 * params.c_delta * params.kappa;
    let mut total = 0.0;
    for pipe in pipes {
        let p = pipe
            .rho
            .iter()
            .map(|&r| pressure(r, params))
            .collect::<Result<Vec<_>>>()?;
        for j in 1..pipe.n_cells() - 1 {
            let u = pipe.q[j] / pipe.rho[j];
            let dp = (p[j + 1] - p[j - 1]) / (2.0 * pipe.dx);
            total += (dp + k * pipe.rho[j] * u * u.abs()).abs() * pipe.dx;
        }
    }
    Ok(total)
}

/// Mass and junction budgets of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationAudit {
    pub steps: usize,
    pub mass_change: f64,
    /// Accumulated mass inflow through pipe ends.
    pub boundary_inflow: f64,
    /// `|mass_change - boundary_inflow|`.
    pub mass_defect: f64,
    pub relative_mass_defect: f64,
    pub max_junction_residual: f64,
    pub max_junction_momentum_balance: f64,
}

pub fn conservation_audit(reports: &[StepReport], initial_mass: f64, final_mass: f64) -> ConservationAudit {
    let boundary_inflow: f64 = reports.iter().map(|r| r.mass_flux_boundary).sum();
    let mass_change = final_mass - initial_mass;
    let mass_defect = (mass_change - boundary_inflow).abs();
    let fold_max = |f: fn(&StepReport) -> &Vec<f64>| {
        reports
            .iter()
            .flat_map(|r| f(r).iter().copied())
            .fold(0.0_f64, f64::max)
    };
    ConservationAudit {
        steps: reports.len(),
        mass_change,
        boundary_inflow,
        mass_defect,
        relative_mass_defect: mass_defect / initial_mass.abs().max(f64::MIN_POSITIVE),
        max_junction_residual: fold_max(|r| &r.junction_residuals),
        max_junction_momentum_balance: fold_max(|r| &r.junction_momentum_balance),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EndKind, State};

    fn pipe(dx: f64, rho: Vec<f64>) -> PipeState {
        let q = vec![0.0; rho.len()];
        PipeState::new(dx, rho, q, EndKind::ZeroGradient, EndKind::ZeroGradient)
    }

    #[test]
    fn l1_examples() {
        let a = pipe(0.25, vec![1.0; 4]);
        let fine = pipe(0.125, vec![1.0; 8]);
        assert_eq!(l1_difference(&[fine.clone()], &[a]).unwrap().rho, 0.0);

        let zero = PipeState::uniform(4, 0.25, State::new(1.0, 0.0), EndKind::ZeroGradient, EndKind::ZeroGradient);
        let mut one = PipeState::uniform(8, 0.125, State::new(2.0, 0.0), EndKind::ZeroGradient, EndKind::ZeroGradient);
        assert!((l1_difference(&[one.clone()], &[zero.clone()]).unwrap().rho - 1.0).abs() < 1e-15);
        one.q = vec![2.0; 8];
        assert!((l1_difference(&[one], &[zero]).unwrap().u - 1.0).abs() < 1e-15);

        // a linear ramp against its exact cell averages
        let f: Vec<f64> = (0..8).map(|j| 1.0 + (j as f64 + 0.5) * 0.125).collect();
        let c: Vec<f64> = (0..4).map(|j| 1.0 + (j as f64 + 0.5) * 0.25).collect();
        assert!(l1_difference(&[pipe(0.125, f)], &[pipe(0.25, c)]).unwrap().rho < 1e-15);
    }

    #[test]
    fn grid_mismatch() {
        let err = l1_difference(&[pipe(0.1, vec![1.0; 6])], &[pipe(0.25, vec![1.0; 4])]).unwrap_err();
        assert!(matches!(err, Error::GridMismatch(_)));
    }

    #[test]
    fn rates() {
        assert_eq!(runge_rate(2e-3, 1e-3).unwrap(), 1.0);
        assert_eq!(runge_rate(4e-3, 1e-3).unwrap(), 2.0);
        assert!(runge_rate(0.0, 1.0).is_err());
        // Table row 1/40 at eps = 0.1: 7.72e-3 -> 3.89e-3
        assert!((runge_rate(7.72e-3, 3.89e-3).unwrap() - 0.99).abs() < 0.01);
    }

    #[test]
    fn rest_residual_vanishes() {
        let p = GasParameters::default();
        assert_eq!(ap_residual(&[pipe(0.1, vec![1.3; 10])], &p).unwrap(), 0.0);
    }

    fn balanced(n: usize, params: &GasParameters) -> PipeState {
        let g = params.gamma;
        let k = params.c_delta * params.kappa;
        let dx = 10.0 / n as f64;
        let rho: Vec<f64> = (0..n)
            .map(|j| {
                let x = (j as f64 + 0.5) * dx;
                (1.0 - (g - 1.0) * k * x / (2.0 * g)).powf(1.0 / (g - 1.0))
            })
            .collect();
        PipeState::new(dx, rho.clone(), rho, EndKind::ZeroGradient, EndKind::ZeroGradient)
    }

    #[test]
    fn manufactured_balance_is_second_order() {
        let params = GasParameters {
            kappa: 0.05,
            ..GasParameters::default()
        };
        let r: Vec<f64> = [50, 100, 200]
            .iter()
            .map(|&n| ap_residual(&[balanced(n, &params)], &params).unwrap())
            .collect();
        for w in r.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.7..=2.3).contains(&order), "order {order}");
        }
    }

    #[test]
    fn table_rows() {
        let sols: Vec<Vec<PipeState>> = [4usize, 8, 16]
            .iter()
            .map(|&n| {
                let dx = 1.0 / n as f64;
                // first-order perturbation dx * sin
                let rho: Vec<f64> = (0..n)
                    .map(|j| 1.0 + dx * (6.0 * (j as f64 + 0.5) * dx).sin())
                    .collect();
                let q = rho.iter().map(|r| r * r).collect();
                vec![PipeState::new(dx, rho, q, EndKind::ZeroGradient, EndKind::ZeroGradient)]
            })
            .collect();
        let rows = convergence_table(&sols).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].rate_rho, None);
        assert!(rows[1].rate_rho.is_some());
        assert_eq!(rows[0].dx, 0.25);
    }

    #[test]
    fn audit_of_empty_history() {
        let a = conservation_audit(&[], 2.0, 2.0);
        assert_eq!(a.mass_defect, 0.0);
        assert_eq!(a.max_junction_residual, 0.0);
    }
}
