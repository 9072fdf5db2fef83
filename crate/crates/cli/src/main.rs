//! `anderson-lab`: seeded experiment runner for the nonlocal parabolic
//! Anderson problem.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use run::Run;

/// Committed desk-scale configuration, used when --config is absent.
const DESK_CONFIG: &str = include_str!("../../../configs/desk.json");

#[derive(Debug, Parser)]
#[command(name = "anderson-lab", version, about = "Seeded experiments for the nonlocal parabolic Anderson problem")]
struct Cli {
    /// JSON experiment configuration (defaults to the committed desk config).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "ANDERSON_LAB_JOBS")]
    jobs: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory (default runs/<subcommand>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Explicit constants and envelope tables.
    Constants,
    /// Eigenvalue scaling, integrated density of states, local grid search.
    Eigen,
    /// u(t,0) on one sampled environment along the t-ladder.
    Quenched {
        /// Comma-separated t-ladder override.
        #[arg(long, value_delimiter = ',')]
        t_ladder: Option<Vec<f64>>,
    },
    /// Environment-averaged u(t,0) along the t-ladder.
    Annealed {
        #[arg(long, value_delimiter = ',')]
        t_ladder: Option<Vec<f64>>,
    },
    /// Upper/lower bound validation campaign.
    Bounds {
        #[arg(long)]
        n_configs: Option<usize>,
    },
    /// Full verification suite (nonzero exit if any criterion fails).
    Acceptance {
        /// Run only these criteria (skips the determinism rerun).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Eigen => "eigen",
            Command::Quenched { .. } => "quenched",
            Command::Annealed { .. } => "annealed",
            Command::Bounds { .. } => "bounds",
            Command::Acceptance { .. } => "acceptance",
        }
    }
}

fn execute(cli: Cli) -> anderson_lab::Result<i32> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(anderson_lab::Error::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().map_err(|e| anderson_lab::Error::Usage(e.to_string()))?;
    }
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => serde_json::from_str(DESK_CONFIG)?,
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match &cli.command {
        Command::Quenched { t_ladder: Some(l) } | Command::Annealed { t_ladder: Some(l) } => cfg.t_ladder = l.clone(),
        Command::Bounds { n_configs: Some(n) } => cfg.bounds.n_configs = *n,
        _ => {}
    }
    cfg.validate()?;
    let name = cli.command.name();
    let out = cli.out.clone().unwrap_or_else(|| run::default_out(name));
    let mut r = Run::new(cfg, out, name)?;
    match &cli.command {
        Command::Constants => run::constants(&mut r)?,
        Command::Eigen => run::eigen(&mut r)?,
        Command::Quenched { .. } => run::quenched(&mut r)?,
        Command::Annealed { .. } => run::annealed(&mut r)?,
        Command::Bounds { .. } => run::bounds(&mut r)?,
        Command::Acceptance { only } => run::acceptance(&mut r, only)?,
    }
    r.finish()
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
