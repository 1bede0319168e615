use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use pipeflow::cli_io::{self, parse_config, Preset, RunConfig, DEFAULT_LADDER};
use pipeflow::{Error, Result, Scheme};

#[derive(Parser)]
#[command(name = "pipeflow", version, about = "Isentropic gas flow with friction on pipe networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one setup and write CSV snapshots plus report.json.
    Run(Common),
    /// Refine a setup along a ladder of cell widths and write convergence.csv.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Inverse cell widths, coarse to fine.
        #[arg(long, value_delimiter = ',')]
        ladder: Option<Vec<f64>>,
    },
    /// Time the AP and explicit schemes on the same setup.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in setup: ex1-1to2, ex1-2to1, ex2-1to2, ex2-2to1 or ex3.
    #[arg(long)]
    preset: Option<Preset>,
    /// ap or explicit.
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Cells per pipe.
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    final_time: Option<f64>,
    #[arg(long)]
    dt_max: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        if let Some(p) = self.preset {
            cfg.preset = Some(p);
            cfg.topology = None;
        }
        if cfg.preset.is_none() && cfg.topology.is_none() {
            return Err(Error::InvalidParameter("pass --preset or --config".into()));
        }
        if let Some(eps) = self.epsilon {
            cfg.params.epsilon = eps;
        }
        if let Some(s) = self.scheme {
            cfg.scheme = s;
        }
        if self.cells.is_some() {
            cfg.cells = self.cells;
        }
        if self.final_time.is_some() {
            cfg.final_time = self.final_time;
        }
        if self.dt_max.is_some() {
            cfg.dt_max = self.dt_max;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        cfg.params.validate()?;
        if cfg.threads > 1 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build_global()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        }
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.resolve()?;
            let report = cli_io::run_simulation(&cfg)?;
            println!(
                "{} steps in {:.3} s, mass defect {:.3e}, max junction residual {:.3e}",
                report.steps,
                report.wall_time,
                report.audit.relative_mass_defect,
                report.audit.max_junction_residual
            );
        }
        Command::Converge { common, ladder } => {
            let cfg = common.resolve()?;
            let ladder = ladder.unwrap_or_else(|| DEFAULT_LADDER.to_vec());
            let rows = cli_io::run_convergence(&cfg, &ladder)?;
            print!("{}", cli_io::output::convergence_csv(&rows));
        }
        Command::Bench(common) => {
            let cfg = common.resolve()?;
            let b = cli_io::bench(&cfg)?;
            println!(
                "ap {:.3} s ({} steps), explicit {:.3} s ({} steps), ratio {:.2}",
                b.ap_wall_time, b.ap_steps, b.explicit_wall_time, b.explicit_steps, b.ratio
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PIPEFLOW_LOG", "warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
