//! Flag definitions and dispatch.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::commands;
use crate::config;
use crate::csvio::fmt_f64;
use crate::error::{CliError, ExitCode};

#[derive(Debug, Parser)]
#[command(name = "eqdrop", version, about = "Dropout-regularized linear networks: optima, SGD, checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form global optimum: writes U.csv, V.csv, product.csv and summary.json.
    Solve(SolveArgs),
    /// Dropout SGD runs: one trace.csv, convergence.svg and summary.json per (lambda, run).
    Train(TrainArgs),
    /// Numeric checks of the landscape and optimum facts.
    Verify(VerifyArgs),
    /// Scalar two-unit objective on a grid: grid.csv, landscape.json, landscape.svg.
    Landscape(LandscapeArgs),
}

/// Matrix, width, regularization and output location.
#[derive(Debug, Clone, Default, Args)]
#[command(group(ArgGroup::new("source").args(["m", "scalar", "gen"])))]
pub struct SourceArgs {
    /// Target matrix as CSV (first line `rows,cols`).
    #[arg(long, value_name = "PATH")]
    pub m: Option<PathBuf>,
    /// 1x1 target.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub scalar: Option<f64>,
    /// Generated target with an exponentially decaying spectrum.
    #[arg(long, value_name = "D1,D2[,TAU[,SEED]]")]
    pub gen: Option<String>,
    /// Number of hidden units.
    #[arg(long)]
    pub r: Option<usize>,
    /// Regularization strengths.
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with = "theta")]
    pub lambda: Vec<f64>,
    /// Retain probability; lambda = (1 - theta) / theta.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Tied weights (V = U); the target must be symmetric PSD.
    #[arg(long)]
    pub tied: bool,
    /// key=value file; flags override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory [default: eqdrop-out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SgdArgs {
    /// Learning rate [default: 0.01].
    #[arg(long)]
    pub eta: Option<f64>,
    /// Number of updates [default: 50000].
    #[arg(long)]
    pub steps: Option<u64>,
    /// Root seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Step-size decay horizon: eta / (1 + t / decay) [default: steps / 10; inf for a constant rate].
    #[arg(long)]
    pub decay: Option<f64>,
    /// Half-width of the uniform initialization [default: 0.5].
    #[arg(long)]
    pub init_scale: Option<f64>,
    /// Runs per lambda [default: 1].
    #[arg(long)]
    pub runs: Option<usize>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: SourceArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub sgd: SgdArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Checks to run (see --list).
    pub checks: Vec<String>,
    /// Run every check.
    #[arg(long, conflicts_with = "checks")]
    pub all: bool,
    /// Print the check names and exit.
    #[arg(long)]
    pub list: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo samples per instance.
    #[arg(long, default_value_t = 1_000_000)]
    pub mc_samples: u64,
    /// Monte Carlo instances.
    #[arg(long, default_value_t = 20)]
    pub mc_trials: usize,
    /// Deliberately break the Monte Carlo comparison (self-test).
    #[arg(long)]
    pub inject_fault: bool,
    #[arg(long, value_name = "DIR", default_value = config::DEFAULT_OUT)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct LandscapeArgs {
    /// Scalar target.
    #[arg(long, allow_negative_numbers = true)]
    pub m: f64,
    #[arg(long)]
    pub lambda: f64,
    /// Grid points per axis, 2..=2048.
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Axis range; defaults to +-1.5 sqrt(max(|m|, 1)).
    #[arg(long, value_names = ["LO", "HI"], num_args = 2, allow_negative_numbers = true)]
    pub range: Option<Vec<f64>>,
    #[arg(long, value_name = "DIR", default_value = config::DEFAULT_OUT)]
    pub out: PathBuf,
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    match &cli.command {
        Command::Solve(a) => {
            for s in commands::solve(&config::resolve(&a.source, None)?)? {
                println!(
                    "lambda={} rho={} alpha={} value={} -> {}",
                    s.lambda,
                    s.rho,
                    fmt_f64(s.alpha),
                    fmt_f64(s.value),
                    s.dir.display()
                );
            }
        }
        Command::Train(a) => {
            for l in commands::train(&config::resolve(&a.source, Some(&a.sgd))?)?.by_lambda {
                println!(
                    "lambda={} optimum={} mean_final={} worst_gap={:.3e}",
                    l.lambda,
                    fmt_f64(l.optimal_value),
                    fmt_f64(l.mean_final_objective),
                    l.worst_gap
                );
            }
        }
        Command::Verify(a) => return commands::verify(a),
        Command::Landscape(a) => {
            let s = commands::landscape(a)?;
            let (u1, u2) = s.argmin_point;
            println!("min={} at ({u1:.6}, {u2:.6}) optimum={}", fmt_f64(s.min), fmt_f64(s.optimal_value));
        }
    }
    Ok(ExitCode::Ok)
}
