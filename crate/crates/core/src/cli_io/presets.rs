//! Code-defined setups of the three T-junction experiments.
//!
//! All use gamma = 5/3, nu = 0.45, C_delta = 1, kappa = 1e-3, theta = 1.3 and a
//! Newton tolerance of 1e-8.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    CouplingCondition, GasParameters, InitialProfile, JunctionSpec, NetworkTopology, PipeSpec,
};
use crate::network::star_topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    /// Smooth profile through a 1-to-2 T-junction.
    #[serde(rename = "ex1-1to2")]
    Ex1OneToTwo,
    /// Smooth profile through a 2-to-1 T-junction.
    #[serde(rename = "ex1-2to1")]
    Ex1TwoToOne,
    /// Inlet jump to 1.3 on a 1-to-2 T-junction.
    #[serde(rename = "ex2-1to2")]
    Ex2OneToTwo,
    /// Inlet jump to 1.3 on a 2-to-1 T-junction.
    #[serde(rename = "ex2-2to1")]
    Ex2TwoToOne,
    /// The 1-to-2 inlet-jump setup used for run-time comparisons.
    #[serde(rename = "ex3")]
    Ex3,
}

pub const ALL_PRESETS: [Preset; 5] = [
    Preset::Ex1OneToTwo,
    Preset::Ex1TwoToOne,
    Preset::Ex2OneToTwo,
    Preset::Ex2TwoToOne,
    Preset::Ex3,
];

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Ex1OneToTwo => "ex1-1to2",
            Preset::Ex1TwoToOne => "ex1-2to1",
            Preset::Ex2OneToTwo => "ex2-1to2",
            Preset::Ex2TwoToOne => "ex2-2to1",
            Preset::Ex3 => "ex3",
        }
    }

    fn shape(self) -> (usize, usize) {
        match self {
            Preset::Ex1TwoToOne | Preset::Ex2TwoToOne => (2, 1),
            _ => (1, 2),
        }
    }

    pub fn is_convergence_test(self) -> bool {
        matches!(self, Preset::Ex1OneToTwo | Preset::Ex1TwoToOne)
    }

    /// Pipe length: `1/eps` for the convergence tests, 100 otherwise.
    pub fn pipe_length(self, epsilon: f64) -> f64 {
        if self.is_convergence_test() {
            1.0 / epsilon
        } else {
            100.0
        }
    }

    /// Cells per pipe by default: `dx = 1/10` for the convergence tests,
    /// 4000 cells otherwise.
    pub fn default_cells(self, epsilon: f64) -> usize {
        if self.is_convergence_test() {
            (10.0 * self.pipe_length(epsilon)).round() as usize
        } else {
            4000
        }
    }

    /// Final time: 0.2 for the convergence tests, `100 eps` for the inlet jump
    /// (10, 1 and 0.1 at eps = 0.1, 0.01, 0.001) and 10 for the comparison runs.
    pub fn default_final_time(self, epsilon: f64) -> f64 {
        match self {
            Preset::Ex1OneToTwo | Preset::Ex1TwoToOne => 0.2,
            Preset::Ex2OneToTwo | Preset::Ex2TwoToOne => 100.0 * epsilon,
            Preset::Ex3 => 10.0,
        }
    }

    pub fn inlet_density(self) -> f64 {
        if self.is_convergence_test() {
            1.1
        } else {
            1.3
        }
    }

    pub fn params(self, epsilon: f64) -> GasParameters {
        GasParameters::with_epsilon(epsilon)
    }

    /// Network with `cells` cells in every pipe.
    pub fn topology(self, epsilon: f64, cells: usize) -> NetworkTopology {
        let (n_in, n_out) = self.shape();
        let length = self.pipe_length(epsilon);
        let rest = PipeSpec {
            length,
            cells,
            initial: InitialProfile::Constant { rho: 1.0, u: 0.0 },
        };
        let ingoing = if self.is_convergence_test() {
            PipeSpec {
                initial: InitialProfile::SmoothStep { epsilon },
                ..rest.clone()
            }
        } else {
            rest.clone()
        };
        star_topology(
            n_in,
            n_out,
            ingoing,
            rest,
            self.inlet_density(),
            JunctionSpec::new(vec![], vec![], CouplingCondition::EqualPressure),
        )
    }

    /// Cells per pipe for a cell width of `1/inverse_dx`.
    pub fn cells_for(self, epsilon: f64, inverse_dx: f64) -> usize {
        (self.pipe_length(epsilon) * inverse_dx).round() as usize
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_PRESETS
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown preset `{s}` (expected one of ex1-1to2, ex1-2to1, ex2-1to2, ex2-2to1, ex3)"
                ))
            })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
