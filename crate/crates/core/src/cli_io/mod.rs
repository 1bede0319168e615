//! Presets, configuration files, output writers and the subcommand drivers.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{parse_config, RunConfig};
pub use presets::{Preset, ALL_PRESETS};
pub use run::{bench, run_convergence, run_simulation, simulate, BenchReport, DEFAULT_LADDER};
