//! TOML run configuration.
//!
//! ```toml
//! scheme = "ap"                  # or "explicit"
//! final_time = 0.5               # defaults to the preset's final time
//! dt_max = 0.01                  # defaults to the smallest cell width
//! boundary_dx_variant = "as-printed"   # or "centered"
//! snapshot_times = [0.0, 0.25]   # the final time is always written
//! output_dir = "out"
//! threads = 1
//! preset = "ex2-1to2"            # or describe the network below
//! cells = 400                    # cells per pipe, overrides the preset default
//!
//! [gas]                          # every key optional
//! gamma = 1.6666666666666667
//! epsilon = 0.1
//! b = 2.0
//! kappa = 0.001
//! c_delta = 1.0
//! theta = 1.3
//! nu = 0.45
//!
//! [[pipes]]
//! length = 1.0
//! cells = 50
//! initial = { kind = "constant", rho = 1.0, u = 0.0 }
//!
//! [[junctions]]
//! ingoing = [0]
//! outgoing = [1, 2]
//! condition = "equal-pressure"   # "equal-momentum" or { pressure-loss = [[0.1, 0.2]] }
//!
//! [[boundaries]]
//! pipe = 0
//! end = "left"
//! condition = { kind = "dirichlet", rho = 1.3 }   # or kind = "zero-gradient" / "periodic"
//! ```

use std::path::PathBuf;

use serde::Deserialize;

use super::presets::Preset;
use crate::ap_stepper::BoundaryDerivative;
use crate::error::{Error, Result};
use crate::model::{BoundarySpec, GasParameters, JunctionSpec, NetworkTopology, PipeSpec};
use crate::simulation::{RunOptions, Scheme};

#[derive(Debug, Clone, Default, Deserialize)]
struct RawGas {
    gamma: Option<f64>,
    epsilon: Option<f64>,
    b: Option<f64>,
    kappa: Option<f64>,
    c_delta: Option<f64>,
    theta: Option<f64>,
    nu: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
struct RawConfig {
    preset: Option<Preset>,
    scheme: Option<Scheme>,
    final_time: Option<f64>,
    dt_max: Option<f64>,
    boundary_dx_variant: Option<BoundaryDerivative>,
    cells: Option<usize>,
    #[serde(default)]
    snapshot_times: Vec<f64>,
    output_dir: Option<PathBuf>,
    threads: Option<usize>,
    #[serde(default)]
    gas: RawGas,
    #[serde(default)]
    pipes: Vec<PipeSpec>,
    #[serde(default)]
    junctions: Vec<JunctionSpec>,
    #[serde(default)]
    boundaries: Vec<BoundarySpec>,
}

/// A parsed configuration; command-line flags may still override fields
/// before [`RunConfig::resolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub topology: Option<NetworkTopology>,
    pub params: GasParameters,
    pub scheme: Scheme,
    pub final_time: Option<f64>,
    pub dt_max: Option<f64>,
    pub boundary_dx_variant: BoundaryDerivative,
    pub cells: Option<usize>,
    pub snapshot_times: Vec<f64>,
    pub output_dir: PathBuf,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: None,
            topology: None,
            params: GasParameters::default(),
            scheme: Scheme::Ap,
            final_time: None,
            dt_max: None,
            boundary_dx_variant: BoundaryDerivative::AsPrinted,
            cells: None,
            snapshot_times: vec![],
            output_dir: PathBuf::from("out"),
            threads: 1,
        }
    }
}

impl RunConfig {
    pub fn from_preset(preset: Preset, epsilon: f64) -> Self {
        Self {
            preset: Some(preset),
            params: preset.params(epsilon),
            ..Self::default()
        }
    }

    /// The network to simulate, with the `cells` override applied.
    pub fn network_topology(&self) -> Result<NetworkTopology> {
        let mut topo = match (&self.preset, &self.topology) {
            (Some(p), None) => {
                let eps = self.params.epsilon;
                p.topology(eps, self.cells.unwrap_or_else(|| p.default_cells(eps)))
            }
            (None, Some(t)) => t.clone(),
            (Some(_), Some(_)) => {
                return Err(Error::Schema {
                    key: "pipes".into(),
                    message: "a preset and an explicit network are mutually exclusive".into(),
                })
            }
            (None, None) => {
                return Err(Error::Schema {
                    key: "pipes".into(),
                    message: "either `preset` or at least one `[[pipes]]` entry is required".into(),
                })
            }
        };
        if let Some(n) = self.cells {
            for p in &mut topo.pipes {
                p.cells = n;
            }
        }
        Ok(topo)
    }

    pub fn resolved_final_time(&self) -> Result<f64> {
        self.final_time
            .or_else(|| self.preset.map(|p| p.default_final_time(self.params.epsilon)))
            .ok_or_else(|| Error::Schema {
                key: "final_time".into(),
                message: "required when no preset is given".into(),
            })
    }

    pub fn run_options(&self) -> Result<RunOptions> {
        Ok(RunOptions {
            scheme: self.scheme,
            final_time: self.resolved_final_time()?,
            dt_max: self.dt_max,
            boundary_derivative: self.boundary_dx_variant,
            snapshot_times: self.snapshot_times.clone(),
            max_steps: None,
        })
    }
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn backticked(message: &str) -> Option<&str> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(&message[start..start + len])
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    if let Err(e) = text.parse::<toml::Table>() {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        return Err(Error::Parse {
            line,
            column,
            message: e.message().to_string(),
        });
    }

    let mut unknown = Vec::new();
    let raw: RawConfig = serde_ignored::deserialize(toml::Deserializer::new(text), |path| {
        unknown.push(path.to_string())
    })
    .map_err(|e| {
        let message = e.message().to_string();
        let key = if message.contains("unknown") {
            backticked(&message).unwrap_or("?").to_string()
        } else {
            e.span()
                .map(|s| {
                    let (l, c) = line_column(text, s.start);
                    format!("line {l}, column {c}")
                })
                .unwrap_or_else(|| "?".into())
        };
        Error::Schema { key, message }
    })?;
    if let Some(key) = unknown.into_iter().next() {
        return Err(Error::Schema {
            key,
            message: "unknown key".into(),
        });
    }

    let defaults = GasParameters::default();
    let g = raw.gas;
    let params = GasParameters {
        gamma: g.gamma.unwrap_or(defaults.gamma),
        epsilon: g.epsilon.unwrap_or(defaults.epsilon),
        b: g.b.unwrap_or(defaults.b),
        kappa: g.kappa.unwrap_or(defaults.kappa),
        c_delta: g.c_delta.unwrap_or(defaults.c_delta),
        theta: g.theta.unwrap_or(defaults.theta),
        nu: g.nu.unwrap_or(defaults.nu),
    };
    params.validate()?;
    if let Some(t) = raw.final_time {
        if !(t > 0.0) {
            return Err(Error::Schema {
                key: "final_time".into(),
                message: "must be positive".into(),
            });
        }
    }

    let topology = (!raw.pipes.is_empty()).then(|| NetworkTopology {
        pipes: raw.pipes,
        junctions: raw.junctions,
        boundaries: raw.boundaries,
    });
    let cfg = RunConfig {
        preset: raw.preset,
        topology,
        params,
        scheme: raw.scheme.unwrap_or_default(),
        final_time: raw.final_time,
        dt_max: raw.dt_max,
        boundary_dx_variant: raw.boundary_dx_variant.unwrap_or_default(),
        cells: raw.cells,
        snapshot_times: raw.snapshot_times,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        threads: raw.threads.unwrap_or(1),
    };
    cfg.network_topology()?;
    Ok(cfg)
}
