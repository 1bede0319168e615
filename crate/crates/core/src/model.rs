//! Domain types: gas constants, pipe states and the network topology.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Densities at or below this are treated as vacuum.
pub const VACUUM_FLOOR: f64 = 1e-12;

/// Physical and scheme constants of the nondimensional model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasParameters {
    /// Ratio of specific heats.
    pub gamma: f64,
    /// Reference Mach number.
    pub epsilon: f64,
    /// Splitting exponent, `alpha = min(1, epsilon^b)`.
    pub b: f64,
    /// Fanning friction coefficient.
    pub kappa: f64,
    /// Cross-section constant.
    pub c_delta: f64,
    /// Generalized minmod parameter.
    pub theta: f64,
    /// CFL number.
    pub nu: f64,
}

impl Default for GasParameters {
    fn default() -> Self {
        Self {
            gamma: 5.0 / 3.0,
            epsilon: 0.1,
            b: 2.0,
            kappa: 1e-3,
            c_delta: 1.0,
            theta: 1.3,
            nu: 0.45,
        }
    }
}

impl GasParameters {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.gamma > 1.0) {
            return bad("gamma must exceed 1");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.b >= 2.0) {
            return bad("b must be at least 2");
        }
        if !(self.kappa >= 0.0) || !(self.c_delta >= 0.0) {
            return bad("kappa and c_delta must be non-negative");
        }
        if !(1.0..=2.0).contains(&self.theta) {
            return bad("theta must lie in [1, 2]");
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return bad("nu must lie in (0, 1]");
        }
        Ok(())
    }

    /// Splitting weight, clamped to 1 for `epsilon >= 1`.
    pub fn alpha(&self) -> f64 {
        self.epsilon.powf(self.b).min(1.0)
    }

    pub fn epsilon_sq(&self) -> f64 {
        self.epsilon * self.epsilon
    }

    /// Friction prefactor `C_delta * kappa / (2 eps^2)`.
    pub fn friction_coefficient(&self) -> f64 {
        self.c_delta * self.kappa / (2.0 * self.epsilon_sq())
    }
}

fn check_density(rho: f64) -> Result<()> {
    if rho > VACUUM_FLOOR {
        Ok(())
    } else {
        Err(Error::NonPositiveDensity { rho })
    }
}

/// `p = rho^gamma`.
pub fn pressure(rho: f64, params: &GasParameters) -> Result<f64> {
    check_density(rho)?;
    Ok(rho.powf(params.gamma))
}

/// `p'(rho) = gamma rho^(gamma - 1)`.
pub fn pressure_derivative(rho: f64, params: &GasParameters) -> Result<f64> {
    check_density(rho)?;
    Ok(params.gamma * rho.powf(params.gamma - 1.0))
}

/// Conserved state `(rho, rho u)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub rho: f64,
    pub q: f64,
}

impl State {
    pub const fn new(rho: f64, q: f64) -> Self {
        Self { rho, q }
    }

    pub fn velocity(&self) -> f64 {
        self.q / self.rho
    }
}

impl std::ops::Add for State {
    type Output = State;
    fn add(self, rhs: State) -> State {
        State::new(self.rho + rhs.rho, self.q + rhs.q)
    }
}

impl std::ops::Sub for State {
    type Output = State;
    fn sub(self, rhs: State) -> State {
        State::new(self.rho - rhs.rho, self.q - rhs.q)
    }
}

impl std::ops::Mul<State> for f64 {
    type Output = State;
    fn mul(self, rhs: State) -> State {
        State::new(self * rhs.rho, self * rhs.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipeEnd {
    Left,
    Right,
}

impl fmt::Display for PipeEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipeEnd::Left => write!(f, "left"),
            PipeEnd::Right => write!(f, "right"),
        }
    }
}

/// How a pipe end closes the stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndKind {
    /// Ghost from a junction solve; boundary interface uses the first-order override.
    Junction,
    /// Fixed ghost density, zero-gradient ghost momentum.
    Dirichlet(f64),
    /// Ghost copies the adjacent cell.
    ZeroGradient,
    /// Ghost copies the cell at the opposite end.
    Periodic,
}

/// Cell averages of one pipe plus one ghost state per end.
#[derive(Debug, Clone)]
pub struct PipeState {
    pub dx: f64,
    pub rho: Vec<f64>,
    pub q: Vec<f64>,
    pub ghost_left: State,
    pub ghost_right: State,
    pub left: EndKind,
    pub right: EndKind,
}

impl PipeState {
    pub fn new(dx: f64, rho: Vec<f64>, q: Vec<f64>, left: EndKind, right: EndKind) -> Self {
        assert_eq!(rho.len(), q.len());
        let ghost_left = State::new(rho[0], q[0]);
        let ghost_right = State::new(rho[rho.len() - 1], q[q.len() - 1]);
        Self {
            dx,
            rho,
            q,
            ghost_left,
            ghost_right,
            left,
            right,
        }
    }

    pub fn uniform(cells: usize, dx: f64, state: State, left: EndKind, right: EndKind) -> Self {
        Self::new(
            dx,
            vec![state.rho; cells],
            vec![state.q; cells],
            left,
            right,
        )
    }

    pub fn n_cells(&self) -> usize {
        self.rho.len()
    }

    pub fn length(&self) -> f64 {
        self.dx * self.n_cells() as f64
    }

    pub fn cell(&self, j: usize) -> State {
        State::new(self.rho[j], self.q[j])
    }

    pub fn x_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dx
    }

    pub fn mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.dx
    }

    /// Refresh ghosts that depend only on the pipe itself.
    pub fn fill_local_ghosts(&mut self) {
        let n = self.n_cells();
        let first = self.cell(0);
        let last = self.cell(n - 1);
        match self.left {
            EndKind::Dirichlet(rho) => self.ghost_left = State::new(rho, first.q),
            EndKind::ZeroGradient => self.ghost_left = first,
            EndKind::Periodic => self.ghost_left = last,
            EndKind::Junction => {}
        }
        match self.right {
            EndKind::Dirichlet(rho) => self.ghost_right = State::new(rho, last.q),
            EndKind::ZeroGradient => self.ghost_right = last,
            EndKind::Periodic => self.ghost_right = first,
            EndKind::Junction => {}
        }
    }

    pub fn ensure_admissible(&self) -> Result<()> {
        for &rho in self.rho.iter().chain([self.ghost_left.rho, self.ghost_right.rho].iter()) {
            check_density(rho)?;
        }
        Ok(())
    }
}

/// Initial condition of a pipe, sampled at cell centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialProfile {
    Constant {
        rho: f64,
        #[serde(default)]
        u: f64,
    },
    /// Plateau 1.1 up to `0.4/eps`, a quarter sine down to 1 at `0.8/eps`, then 1.
    SmoothStep { epsilon: f64 },
    /// `mean + amplitude sin(2 pi waves x / L)` at velocity `u`.
    Sine {
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        u: f64,
        #[serde(default = "one")]
        waves: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for InitialProfile {
    fn default() -> Self {
        InitialProfile::Constant { rho: 1.0, u: 0.0 }
    }
}

impl InitialProfile {
    pub fn sample(&self, x: f64, length: f64) -> State {
        match *self {
            InitialProfile::Constant { rho, u } => State::new(rho, rho * u),
            InitialProfile::SmoothStep { epsilon } => {
                let rho = if x <= 0.4 / epsilon {
                    1.1
                } else if x < 0.8 / epsilon {
                    1.0 + 0.1 * (std::f64::consts::PI * epsilon * x / 0.8).sin()
                } else {
                    1.0
                };
                State::new(rho, 0.0)
            }
            InitialProfile::Sine {
                mean,
                amplitude,
                u,
                waves,
            } => {
                let rho = mean
                    + amplitude * (2.0 * std::f64::consts::PI * waves * x / length).sin();
                State::new(rho, rho * u)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipeSpec {
    pub length: f64,
    pub cells: usize,
    #[serde(default)]
    pub initial: InitialProfile,
}

impl PipeSpec {
    pub fn dx(&self) -> f64 {
        self.length / self.cells as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryCondition {
    Dirichlet { rho: f64 },
    ZeroGradient,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub pipe: usize,
    pub end: PipeEnd,
    pub condition: BoundaryCondition,
}

/// Closure relation paired with momentum conservation at a junction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingCondition {
    EqualPressure,
    EqualMomentum,
    /// `h[k][l]` for ingoing position `k` and outgoing position `l`.
    PressureLoss(Vec<Vec<f64>>),
}

/// How the momentum balance sums the per-pipe curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SumConvention {
    /// Ingoing pipes on the forward 1-curve, outgoing on the reversed 2-curve,
    /// balance `sum_in - sum_out`.
    #[default]
    Oriented,
    /// Every pipe on the reversed 2-curve in its own coordinates, plain sum.
    Verbatim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionSpec {
    /// Pipes whose right end meets the junction.
    pub ingoing: Vec<usize>,
    /// Pipes whose left end meets the junction.
    pub outgoing: Vec<usize>,
    #[serde(default = "default_condition")]
    pub condition: CouplingCondition,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    #[serde(default)]
    pub sum_convention: SumConvention,
}

fn default_condition() -> CouplingCondition {
    CouplingCondition::EqualPressure
}

fn default_newton_tol() -> f64 {
    1e-8
}

fn default_newton_max_iter() -> usize {
    50
}

impl JunctionSpec {
    pub fn new(ingoing: Vec<usize>, outgoing: Vec<usize>, condition: CouplingCondition) -> Self {
        Self {
            ingoing,
            outgoing,
            condition,
            newton_tol: default_newton_tol(),
            newton_max_iter: default_newton_max_iter(),
            sum_convention: SumConvention::Oriented,
        }
    }

    pub fn degree(&self) -> usize {
        self.ingoing.len() + self.outgoing.len()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkTopology {
    pub pipes: Vec<PipeSpec>,
    #[serde(default)]
    pub junctions: Vec<JunctionSpec>,
    #[serde(default)]
    pub boundaries: Vec<BoundarySpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopologyDefect {
    DanglingEnd { pipe: usize, end: PipeEnd },
    DoublyClaimedEnd { pipe: usize, end: PipeEnd },
    NoIngoing { junction: usize },
    NoOutgoing { junction: usize },
    TooFewCells { pipe: usize, cells: usize },
    NonPositiveLength { pipe: usize },
    UnknownPipe { pipe: usize },
    UnpairedPeriodic { pipe: usize },
    BadJunctionParameter { junction: usize, what: String },
}

impl fmt::Display for TopologyDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TopologyDefect::*;
        match self {
            DanglingEnd { pipe, end } => write!(f, "dangling pipe end: pipe {pipe} {end}"),
            DoublyClaimedEnd { pipe, end } => write!(f, "doubly-claimed end: pipe {pipe} {end}"),
            NoIngoing { junction } => write!(f, "junction {junction} has no ingoing pipe"),
            NoOutgoing { junction } => write!(f, "junction {junction} has no outgoing pipe"),
            TooFewCells { pipe, cells } => {
                write!(f, "pipe {pipe} has {cells} cells, at least 3 required")
            }
            NonPositiveLength { pipe } => write!(f, "pipe {pipe} has non-positive length"),
            UnknownPipe { pipe } => write!(f, "reference to unknown pipe {pipe}"),
            UnpairedPeriodic { pipe } => {
                write!(f, "pipe {pipe} is periodic on one end only")
            }
            BadJunctionParameter { junction, what } => write!(f, "junction {junction}: {what}"),
        }
    }
}

/// Collect every structural defect of a topology; an empty list means valid.
pub fn validate_topology(net: &NetworkTopology) -> Vec<TopologyDefect> {
    let mut defects = Vec::new();
    let n = net.pipes.len();
    // claims[pipe][0 = left, 1 = right]
    let mut claims = vec![[0usize; 2]; n];
    let mut periodic = vec![[false; 2]; n];
    let slot = |end: PipeEnd| match end {
        PipeEnd::Left => 0,
        PipeEnd::Right => 1,
    };

    for (i, pipe) in net.pipes.iter().enumerate() {
        if pipe.cells < 3 {
            defects.push(TopologyDefect::TooFewCells {
                pipe: i,
                cells: pipe.cells,
            });
        }
        if !(pipe.length > 0.0) || !pipe.length.is_finite() {
            defects.push(TopologyDefect::NonPositiveLength { pipe: i });
        }
    }

    for (j, junction) in net.junctions.iter().enumerate() {
        if junction.ingoing.is_empty() {
            defects.push(TopologyDefect::NoIngoing { junction: j });
        }
        if junction.outgoing.is_empty() {
            defects.push(TopologyDefect::NoOutgoing { junction: j });
        }
        let ends = junction
            .ingoing
            .iter()
            .map(|&p| (p, PipeEnd::Right))
            .chain(junction.outgoing.iter().map(|&p| (p, PipeEnd::Left)));
        for (pipe, end) in ends {
            if pipe >= n {
                defects.push(TopologyDefect::UnknownPipe { pipe });
            } else {
                claims[pipe][slot(end)] += 1;
            }
        }
        if !(junction.newton_tol > 0.0) {
            defects.push(TopologyDefect::BadJunctionParameter {
                junction: j,
                what: "newton_tol must be positive".into(),
            });
        }
        if junction.newton_max_iter == 0 {
            defects.push(TopologyDefect::BadJunctionParameter {
                junction: j,
                what: "newton_max_iter must be positive".into(),
            });
        }
        if let CouplingCondition::PressureLoss(h) = &junction.condition {
            let shape_ok = h.len() == junction.ingoing.len()
                && h.iter().all(|row| row.len() == junction.outgoing.len());
            if !shape_ok {
                defects.push(TopologyDefect::BadJunctionParameter {
                    junction: j,
                    what: "pressure-loss table must be ingoing x outgoing".into(),
                });
            } else if h.iter().flatten().any(|v| !v.is_finite()) {
                defects.push(TopologyDefect::BadJunctionParameter {
                    junction: j,
                    what: "pressure-loss table has non-finite entries".into(),
                });
            }
        }
    }

    for b in &net.boundaries {
        if b.pipe >= n {
            defects.push(TopologyDefect::UnknownPipe { pipe: b.pipe });
            continue;
        }
        claims[b.pipe][slot(b.end)] += 1;
        if b.condition == BoundaryCondition::Periodic {
            periodic[b.pipe][slot(b.end)] = true;
        }
    }

    for (pipe, c) in claims.iter().enumerate() {
        for (s, end) in [PipeEnd::Left, PipeEnd::Right].into_iter().enumerate() {
            match c[s] {
                0 => defects.push(TopologyDefect::DanglingEnd { pipe, end }),
                1 => {}
                _ => defects.push(TopologyDefect::DoublyClaimedEnd { pipe, end }),
            }
        }
        if periodic[pipe][0] != periodic[pipe][1] {
            defects.push(TopologyDefect::UnpairedPeriodic { pipe });
        }
    }
    defects
}
