//! Network state: pipes, ghost filling and junction coupling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::junction::{ghost_states, solve_junction_indexed, JunctionSolution, TraceData};
use crate::model::{
    validate_topology, BoundaryCondition, BoundarySpec, EndKind, GasParameters, InitialProfile,
    JunctionSpec, NetworkTopology, PipeEnd, PipeSpec, PipeState, State,
};

/// Which pipe end a ghost belongs to, as an index pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EndRef {
    pub pipe: usize,
    pub end: PipeEnd,
}

#[derive(Debug, Clone)]
pub struct Network {
    pub topology: NetworkTopology,
    pub pipes: Vec<PipeState>,
    pub params: GasParameters,
    pub time: f64,
    /// Run the per-pipe and per-junction work on the rayon pool.
    pub parallel: bool,
}

impl Network {
    /// Validate the topology and sample the initial profiles at cell centers.
    pub fn new(topology: NetworkTopology, params: GasParameters) -> Result<Self> {
        params.validate()?;
        let defects = validate_topology(&topology);
        if !defects.is_empty() {
            return Err(Error::InvalidTopology(defects));
        }

        let mut kinds = vec![[EndKind::Junction; 2]; topology.pipes.len()];
        for b in &topology.boundaries {
            let slot = match b.end {
                PipeEnd::Left => 0,
                PipeEnd::Right => 1,
            };
            kinds[b.pipe][slot] = match b.condition {
                BoundaryCondition::Dirichlet { rho } => EndKind::Dirichlet(rho),
                BoundaryCondition::ZeroGradient => EndKind::ZeroGradient,
                BoundaryCondition::Periodic => EndKind::Periodic,
            };
        }

        let pipes = topology
            .pipes
            .iter()
            .zip(&kinds)
            .map(|(spec, kind)| {
                let dx = spec.dx();
                let (rho, q) = (0..spec.cells)
                    .map(|j| {
                        let s = spec.initial.sample((j as f64 + 0.5) * dx, spec.length);
                        (s.rho, s.q)
                    })
                    .unzip();
                PipeState::new(dx, rho, q, kind[0], kind[1])
            })
            .collect::<Vec<_>>();
        for p in &pipes {
            p.ensure_admissible()?;
        }

        Ok(Self {
            topology,
            pipes,
            params,
            time: 0.0,
            parallel: false,
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.pipes.iter().map(PipeState::mass).sum()
    }

    pub fn total_cells(&self) -> usize {
        self.pipes.iter().map(PipeState::n_cells).sum()
    }

    /// Cell values next to junction `j`, ingoing pipes first.
    pub fn traces(&self, j: usize) -> TraceData {
        let spec = &self.topology.junctions[j];
        let last = |p: usize| {
            let pipe = &self.pipes[p];
            pipe.cell(pipe.n_cells() - 1)
        };
        TraceData::new(
            spec.ingoing.iter().map(|&p| last(p)).collect(),
            spec.outgoing.iter().map(|&p| self.pipes[p].cell(0)).collect(),
        )
    }

    /// Solve every junction from the current cell values.
    pub fn solve_junctions(&self) -> Result<Vec<JunctionSolution>> {
        let solve = |(j, spec): (usize, &JunctionSpec)| {
            solve_junction_indexed(j, &self.traces(j), spec, &self.params)
        };
        if self.parallel {
            self.topology.junctions.par_iter().enumerate().map(solve).collect()
        } else {
            self.topology.junctions.iter().enumerate().map(solve).collect()
        }
    }

    /// Refresh all ghosts: boundary ghosts from the pipes themselves, junction
    /// ghosts from fresh half-Riemann solves. Returns the junction solutions.
    pub fn fill_ghosts(&mut self) -> Result<Vec<JunctionSolution>> {
        for pipe in &mut self.pipes {
            pipe.fill_local_ghosts();
        }
        let solutions = self.solve_junctions()?;
        for (solution, spec) in solutions.iter().zip(&self.topology.junctions) {
            for g in ghost_states(solution, spec) {
                let pipe = &mut self.pipes[g.pipe];
                match g.end {
                    PipeEnd::Left => pipe.ghost_left = g.state,
                    PipeEnd::Right => pipe.ghost_right = g.state,
                }
            }
        }
        Ok(solutions)
    }

    /// Ends attached to junctions, in junction order.
    pub fn junction_ends(&self) -> Vec<EndRef> {
        self.topology
            .junctions
            .iter()
            .flat_map(|s| {
                s.ingoing
                    .iter()
                    .map(|&pipe| EndRef { pipe, end: PipeEnd::Right })
                    .chain(s.outgoing.iter().map(|&pipe| EndRef { pipe, end: PipeEnd::Left }))
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

/// Star-shaped network: `n_in` ingoing pipes with Dirichlet inlets at their left
/// ends, `n_out` outgoing pipes with zero-gradient outlets at their right ends.
/// Ingoing pipes are numbered first.
pub fn star_topology(
    n_in: usize,
    n_out: usize,
    ingoing: PipeSpec,
    outgoing: PipeSpec,
    inlet_rho: f64,
    junction: JunctionSpec,
) -> NetworkTopology {
    let mut pipes = vec![ingoing; n_in];
    pipes.extend(std::iter::repeat(outgoing).take(n_out));
    let mut boundaries = Vec::new();
    for p in 0..n_in {
        boundaries.push(BoundarySpec {
            pipe: p,
            end: PipeEnd::Left,
            condition: BoundaryCondition::Dirichlet { rho: inlet_rho },
        });
    }
    for p in n_in..n_in + n_out {
        boundaries.push(BoundarySpec {
            pipe: p,
            end: PipeEnd::Right,
            condition: BoundaryCondition::ZeroGradient,
        });
    }
    NetworkTopology {
        pipes,
        junctions: vec![JunctionSpec {
            ingoing: (0..n_in).collect(),
            outgoing: (n_in..n_in + n_out).collect(),
            ..junction
        }],
        boundaries,
    }
}

/// One periodic pipe.
pub fn periodic_pipe(length: f64, cells: usize, initial: InitialProfile) -> NetworkTopology {
    NetworkTopology {
        pipes: vec![PipeSpec {
            length,
            cells,
            initial,
        }],
        junctions: vec![],
        boundaries: [PipeEnd::Left, PipeEnd::Right]
            .into_iter()
            .map(|end| BoundarySpec {
                pipe: 0,
                end,
                condition: BoundaryCondition::Periodic,
            })
            .collect(),
    }
}

/// A uniform state on every pipe of a topology.
pub fn with_uniform_state(mut topology: NetworkTopology, state: State) -> NetworkTopology {
    for p in &mut topology.pipes {
        p.initial = InitialProfile::Constant {
            rho: state.rho,
            u: state.velocity(),
        };
    }
    topology
}
