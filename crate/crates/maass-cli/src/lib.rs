//! Command-line front end: eigenvalue scans, coefficient expansion,
//! verification reports, Shimura lifts, Weyl counts and weight tracks.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use maass::geometry::GroupContext;
use maass::multipliers::{MultiplierFamily, MultiplierSystem};
use maass::solver::{HejhalSolver, SolverConfig, SolverError, DEFAULT_STEP};

pub mod commands;
pub mod config;
pub mod record;

/// Bad flag combination; reported with exit status 2.
#[derive(Debug, thiserror::Error)]
#[error("usage: {0}")]
pub struct UsageError(pub String);

#[derive(Debug, Parser)]
#[command(name = "maass", version, about = "Maass waveforms of real weight")]
pub struct Cli {
    /// Worker threads for the parallel scans.
    #[arg(long, env = "MAASS_THREADS", global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate eigenvalues in a window; one record per eigenvalue plus summary.csv.
    Scan(ScanArgs),
    /// Add Phase-2 coefficients to a record.
    Expand(ExpandArgs),
    /// Residual tables for the relations that apply to a record.
    Verify(VerifyArgs),
    /// Shimura lift of a theta-multiplier record.
    Shimura(ShimuraArgs),
    /// Weyl-law counts against a scan summary.
    Weyl(WeylArgs),
    /// Follow eigenvalues across a grid of weights.
    Track(TrackArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GroupArgs {
    #[arg(long, default_value_t = 1)]
    pub level: u32,
    #[arg(long, default_value = "eta")]
    pub multiplier: MultiplierFamily,
    /// Weight k (fixed at 1/2 for theta and 0 for trivial).
    #[arg(long)]
    pub weight: Option<f64>,
    /// key = value file overriding solver defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    #[arg(long)]
    pub rmin: f64,
    #[arg(long)]
    pub rmax: f64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    #[arg(long, default_value = "maass-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[arg(long)]
    pub record: PathBuf,
    /// Largest index at infinity.
    #[arg(long, default_value_t = 250)]
    pub n_max: i64,
    /// Output record; defaults to rewriting the input.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub record: PathBuf,
    /// CSV residual table; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Do not store the check summaries back into the record.
    #[arg(long)]
    pub no_update: bool,
}

#[derive(Debug, Args)]
pub struct ShimuraArgs {
    #[arg(long)]
    pub record: PathBuf,
    /// Square-free index with a(t) != 0.
    #[arg(long, default_value_t = 1)]
    pub t: u64,
    #[arg(long, default_value_t = 10)]
    pub n_max: u64,
    /// CSV `n,value` of reference coefficients for a side-by-side column.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WeylArgs {
    #[arg(long)]
    pub weight: f64,
    #[arg(long, default_value_t = 2.0)]
    pub tmin: f64,
    #[arg(long)]
    pub tmax: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tstep: f64,
    /// summary.csv of a scan; without it only predictions are written.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    /// Comma-separated weights, in decreasing order.
    #[arg(long, value_delimiter = ',', required = true)]
    pub weights: Vec<f64>,
    #[arg(long)]
    pub rmin: f64,
    #[arg(long)]
    pub rmax: f64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    /// Trace points CSV; crossings go to the same name with `-crossings`.
    #[arg(long, default_value = "traces.csv")]
    pub out: PathBuf,
}

/// A validated group/multiplier choice with the resolved solver config.
#[derive(Debug, Clone)]
pub struct Setup {
    pub family: MultiplierFamily,
    pub level: u32,
    pub weight: f64,
    pub config: SolverConfig,
}

impl Setup {
    pub fn from_args(g: &GroupArgs) -> Result<Self> {
        let weight = match (g.multiplier, g.level, g.weight) {
            (MultiplierFamily::Theta, 4, None) => 0.5,
            (MultiplierFamily::Theta, 4, Some(k)) if k == 0.5 => k,
            (MultiplierFamily::Theta, 4, Some(k)) => {
                return Err(UsageError(format!("theta has weight 1/2, got --weight {k}")).into())
            }
            (MultiplierFamily::Theta, n, _) => {
                return Err(UsageError(format!("theta requires --level 4, got {n}")).into())
            }
            (MultiplierFamily::Eta, 1, Some(k)) => k,
            (MultiplierFamily::Eta, 1, None) => {
                return Err(UsageError("eta needs --weight".into()).into())
            }
            (MultiplierFamily::Eta, n, _) => {
                return Err(UsageError(format!("eta requires --level 1, got {n}")).into())
            }
            (MultiplierFamily::Trivial, 1 | 2 | 4, None) => 0.0,
            (MultiplierFamily::Trivial, 1 | 2 | 4, Some(k)) if k == 0.0 => 0.0,
            (MultiplierFamily::Trivial, 1 | 2 | 4, Some(k)) => {
                return Err(UsageError(format!(
                    "trivial multiplier has weight 0, got --weight {k}"
                ))
                .into())
            }
            (MultiplierFamily::Trivial, n, _) => {
                return Err(UsageError(format!("--level must be 1, 2 or 4, got {n}")).into())
            }
        };
        let ctx = GroupContext::new(g.level)?;
        let mut config = SolverConfig::for_group(&ctx);
        if let Some(path) = &g.config {
            config::apply_file(&mut config, path)?;
        }
        let setup = Self {
            family: g.multiplier,
            level: g.level,
            weight,
            config,
        };
        setup.solver_at(weight)?;
        Ok(setup)
    }

    pub fn build_solver(&self, weight: f64) -> Result<HejhalSolver, SolverError> {
        let v = MultiplierSystem::new(self.family, weight, self.level)?;
        HejhalSolver::new(GroupContext::new(self.level)?, v, self.config.clone())
    }

    pub fn solver_at(&self, weight: f64) -> Result<HejhalSolver> {
        Ok(self.build_solver(weight)?)
    }

    pub fn solver(&self) -> Result<HejhalSolver> {
        self.solver_at(self.weight)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        // a pool may already exist when run is called twice in one process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match cli.command {
        Command::Scan(a) => commands::scan(&a).map(|_| ()),
        Command::Expand(a) => commands::expand(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Shimura(a) => commands::shimura(&a),
        Command::Weyl(a) => commands::weyl(&a),
        Command::Track(a) => commands::track(&a),
    }
}
