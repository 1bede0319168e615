use crate::error::{Error, Result};

/// Pivots below this magnitude are treated as singular.
pub const PIVOT_FLOOR: f64 = 1e-14;

/// Row `j` reads `sub[j] x[j-1] + diag[j] x[j] + sup[j] x[j+1] = rhs[j]`.
///
/// In a cyclic system `sub[0]` couples row 0 to the last unknown and
/// `sup[n-1]` couples the last row to `x[0]`; otherwise both are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub rhs: Vec<f64>,
    pub cyclic: bool,
}

impl TridiagonalSystem {
    pub fn new(n: usize) -> Self {
        Self {
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
            rhs: vec![0.0; n],
            cyclic: false,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn couplings(&self, j: usize) -> (f64, f64) {
        let n = self.len();
        let sub = if j > 0 || self.cyclic { self.sub[j] } else { 0.0 };
        let sup = if j + 1 < n || self.cyclic { self.sup[j] } else { 0.0 };
        (sub, sup)
    }

    /// First row violating strict diagonal dominance, if any.
    pub fn check_dominance(&self) -> Result<()> {
        for j in 0..self.len() {
            let (sub, sup) = self.couplings(j);
            if !(self.diag[j].abs() > sub.abs() + sup.abs()) {
                return Err(Error::SingularSystem {
                    row: j,
                    pivot: self.diag[j],
                });
            }
        }
        Ok(())
    }

    /// Matrix-vector product, honouring the cyclic corners.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|j| {
                let (sub, sup) = self.couplings(j);
                let left = if j > 0 { x[j - 1] } else { x[n - 1] };
                let right = if j + 1 < n { x[j + 1] } else { x[0] };
                sub * left + self.diag[j] * x[j] + sup * right
            })
            .collect()
    }
}

/// Thomas algorithm on the non-cyclic part of `(sub, diag, sup)`.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut pivot = diag[0];
    for j in 0..n {
        if j > 0 {
            pivot = diag[j] - sub[j] * c[j - 1];
        }
        if !(pivot.abs() >= PIVOT_FLOOR) {
            return Err(Error::SingularSystem { row: j, pivot });
        }
        c[j] = sup[j] / pivot;
        x[j] = (rhs[j] - if j > 0 { sub[j] * x[j - 1] } else { 0.0 }) / pivot;
    }
    for j in (0..n.saturating_sub(1)).rev() {
        x[j] -= c[j] * x[j + 1];
    }
    Ok(x)
}

/// Direct solve; cyclic systems use a Sherman-Morrison rank-one correction.
pub fn solve_tridiagonal(sys: &TridiagonalSystem) -> Result<Vec<f64>> {
    let n = sys.len();
    if n == 0 {
        return Ok(vec![]);
    }
    if !sys.cyclic || n < 3 {
        if sys.cyclic {
            return Err(Error::InvalidParameter(
                "cyclic tridiagonal systems need at least 3 unknowns".into(),
            ));
        }
        return thomas(&sys.sub, &sys.diag, &sys.sup, &sys.rhs);
    }

    let top = sys.sub[0];
    let bottom = sys.sup[n - 1];
    let gamma = -sys.diag[0];
    let mut diag = sys.diag.clone();
    diag[0] -= gamma;
    diag[n - 1] -= bottom * top / gamma;
    let x = thomas(&sys.sub, &diag, &sys.sup, &sys.rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = bottom;
    let z = thomas(&sys.sub, &diag, &sys.sup, &u)?;
    let fact = (x[0] + top * x[n - 1] / gamma) / (1.0 + z[0] + top * z[n - 1] / gamma);
    Ok(x.iter().zip(&z).map(|(a, b)| a - fact * b).collect())
}
