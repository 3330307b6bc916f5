//! The four subcommands. Each takes resolved settings, writes its files and
//! returns what it wrote in summary form.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use eqdrop_core::matrixkit::singular_values;
use eqdrop_core::objective::{importance_stats, FactorPair};
use eqdrop_core::rng::{self, domain};
use eqdrop_core::sgd::{self, SgdConfig, TrainTrace};
use eqdrop_core::solver::{self, optimal_value};
use eqdrop_core::verify::{self, Check, CheckReport, SuiteConfig};
use eqdrop_core::{DropoutConfig, Matrix};

use crate::cli::{LandscapeArgs, VerifyArgs};
use crate::config::ExperimentConfig;
use crate::csvio;
use crate::error::{CliError, ExitCode};
use crate::svg;

pub const MAX_GRID: usize = 2048;

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("summaries serialize");
    text.push('\n');
    csvio::write_file(path, text.as_bytes())
}

pub fn lambda_dir(out: &Path, lambda: f64) -> PathBuf {
    out.join(format!("lambda_{lambda}"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub source: String,
    pub rows: usize,
    pub cols: usize,
    pub r: usize,
    pub tied: bool,
    pub lambda: f64,
    pub theta: f64,
    pub unregularized: bool,
    pub rho: usize,
    pub kappa_rho: f64,
    pub alpha: f64,
    pub value: f64,
    #[serde(skip)]
    pub dir: PathBuf,
}

/// Writes `U.csv`, `V.csv`, `product.csv` and `summary.json` per `λ`,
/// directly into the output directory for a single `λ` and into
/// `lambda_<λ>/` otherwise.
pub fn solve(cfg: &ExperimentConfig) -> Result<Vec<SolveSummary>, CliError> {
    let m = cfg.source.load()?;
    let mut summaries = Vec::with_capacity(cfg.dropout.len());
    for d in &cfg.dropout {
        let lambda = d.lambda();
        let opt = if cfg.tied { solver::solve_tied(&m, cfg.r, lambda)? } else { solver::solve_general(&m, cfg.r, lambda)? };
        let dir = if cfg.dropout.len() == 1 { cfg.out.clone() } else { lambda_dir(&cfg.out, lambda) };
        create_dir(&dir)?;
        csvio::write_matrix(&dir.join("U.csv"), &opt.factors.u)?;
        csvio::write_matrix(&dir.join("V.csv"), &opt.factors.v)?;
        csvio::write_matrix(&dir.join("product.csv"), &opt.product)?;
        let summary = SolveSummary {
            source: cfg.source.to_string(),
            rows: m.rows(),
            cols: m.cols(),
            r: cfg.r,
            tied: cfg.tied,
            lambda,
            theta: d.theta(),
            unregularized: d.is_unregularized(),
            rho: opt.level.rho,
            kappa_rho: opt.level.kappa_rho,
            alpha: opt.level.alpha,
            value: opt.value,
            dir: dir.clone(),
        };
        write_json(&dir.join("summary.json"), &summary)?;
        summaries.push(summary);
    }
    Ok(summaries)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub source: String,
    pub r: usize,
    pub tied: bool,
    pub lambda: f64,
    pub theta: f64,
    pub unregularized: bool,
    pub run: usize,
    pub seed: u64,
    pub eta: f64,
    pub steps: u64,
    pub decay: Option<f64>,
    pub init_scale: f64,
    pub optimal_value: f64,
    pub final_objective: f64,
    pub gap: f64,
    pub initial_importance_variance: f64,
    pub final_importance_variance: f64,
    /// `‖u_i‖ ‖v_i‖` of the final factors.
    pub importance_scores: Vec<f64>,
    #[serde(skip)]
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaSummary {
    pub lambda: f64,
    pub optimal_value: f64,
    pub mean_final_objective: f64,
    pub worst_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub runs: Vec<RunSummary>,
    pub by_lambda: Vec<LambdaSummary>,
}

/// Seed of run `k` under the root seed.
pub fn run_seed(root: u64, k: usize) -> u64 {
    rng::derive_seed(root, domain::RUN, k as u64)
}

fn train_one(
    m: &Matrix,
    spectrum: &[f64],
    cfg: &ExperimentConfig,
    d: DropoutConfig,
    run: usize,
) -> Result<RunSummary, CliError> {
    let lambda = d.lambda();
    let sgd_cfg = SgdConfig { theta: d.theta(), seed: run_seed(cfg.sgd.seed, run), ..cfg.sgd };
    let (factors, trace): (FactorPair, TrainTrace) = if cfg.tied {
        let (u, t) = sgd::dropout_sgd_tied(m, cfg.r, &sgd_cfg)?;
        (FactorPair::tied(u)?, t)
    } else {
        sgd::dropout_sgd(m, cfg.r, &sgd_cfg)?
    };
    let optimum = optimal_value(spectrum, cfg.r, lambda);
    let dir = lambda_dir(&cfg.out, lambda).join(format!("run_{run}"));
    create_dir(&dir)?;
    csvio::write_trace(&dir.join("trace.csv"), &trace)?;
    csvio::write_matrix(&dir.join("U.csv"), &factors.u)?;
    if !cfg.tied {
        csvio::write_matrix(&dir.join("V.csv"), &factors.v)?;
    }
    let title = format!(
        "{}, r={}, lambda={lambda}, theta={}, eta={}, steps={}, seed={}{}",
        cfg.source,
        cfg.r,
        d.theta(),
        sgd_cfg.eta,
        sgd_cfg.steps,
        sgd_cfg.seed,
        if cfg.tied { ", tied" } else { "" }
    );
    csvio::write_file(&dir.join("convergence.svg"), svg::convergence_svg(&trace, optimum, &title).as_bytes())?;

    let final_objective = trace.final_objective().unwrap_or(f64::NAN);
    let summary = RunSummary {
        source: cfg.source.to_string(),
        r: cfg.r,
        tied: cfg.tied,
        lambda,
        theta: d.theta(),
        unregularized: d.is_unregularized(),
        run,
        seed: sgd_cfg.seed,
        eta: sgd_cfg.eta,
        steps: sgd_cfg.steps,
        decay: sgd_cfg.decay,
        init_scale: sgd_cfg.init_scale,
        optimal_value: optimum,
        final_objective,
        gap: final_objective - optimum,
        initial_importance_variance: trace.importance_variance.first().copied().unwrap_or(f64::NAN),
        final_importance_variance: trace.final_variance().unwrap_or(f64::NAN),
        importance_scores: importance_stats(&factors).scores,
        dir: dir.clone(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Runs every `(λ, run)` pair on a worker pool, then writes the aggregate
/// `summary.json` into the output directory. The first failing run (in
/// `(λ, run)` order) aborts with its error.
pub fn train(cfg: &ExperimentConfig) -> Result<TrainReport, CliError> {
    let m = cfg.source.load()?;
    let spectrum = singular_values(&m)?;
    let jobs: Vec<(DropoutConfig, usize)> =
        cfg.dropout.iter().flat_map(|&d| (0..cfg.runs).map(move |k| (d, k))).collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| CliError::usage(format!("worker pool: {e}")))?;
    let results: Vec<Result<RunSummary, CliError>> =
        pool.install(|| jobs.par_iter().map(|&(d, k)| train_one(&m, &spectrum, cfg, d, k)).collect());
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let by_lambda = cfg
        .dropout
        .iter()
        .map(|d| {
            let mine: Vec<&RunSummary> = runs.iter().filter(|s| s.lambda == d.lambda()).collect();
            LambdaSummary {
                lambda: d.lambda(),
                optimal_value: mine[0].optimal_value,
                mean_final_objective: mine.iter().map(|s| s.final_objective).sum::<f64>() / mine.len() as f64,
                worst_gap: mine.iter().map(|s| s.gap.abs()).fold(0.0, f64::max),
            }
        })
        .collect();
    let report = TrainReport { runs, by_lambda };
    create_dir(&cfg.out)?;
    write_json(&cfg.out.join("summary.json"), &report)?;
    Ok(report)
}

#[derive(Serialize)]
struct ReportRecord<'a> {
    name: &'a str,
    passed: bool,
    max_violation: f64,
    tolerance: f64,
    details: &'a str,
}

pub fn report_line(r: &CheckReport) -> String {
    format!(
        "{} {} max_violation={:.3e} tolerance={:.3e} {}",
        if r.passed { "PASS" } else { "FAIL" },
        r.name,
        r.max_violation,
        r.tolerance,
        r.details
    )
}

/// Writes `verify_report.txt` and `verify_report.json`.
pub fn write_reports(out: &Path, reports: &[CheckReport]) -> Result<(), CliError> {
    create_dir(out)?;
    let mut text: String = reports.iter().map(|r| report_line(r) + "\n").collect();
    let failed = reports.iter().filter(|r| !r.passed).count();
    text.push_str(&format!("{} checks, {failed} failed\n", reports.len()));
    csvio::write_file(&out.join("verify_report.txt"), text.as_bytes())?;
    let records: Vec<ReportRecord> = reports
        .iter()
        .map(|r| ReportRecord {
            name: &r.name,
            passed: r.passed,
            max_violation: r.max_violation,
            tolerance: r.tolerance,
            details: &r.details,
        })
        .collect();
    write_json(&out.join("verify_report.json"), &records)
}

pub fn select_checks(args: &VerifyArgs) -> Result<Vec<Check>, CliError> {
    if args.all {
        return Ok(Check::ALL.to_vec());
    }
    if args.checks.is_empty() {
        return Err(CliError::usage("name one or more checks or pass --all (see --list)"));
    }
    args.checks
        .iter()
        .map(|n| {
            Check::from_name(n).ok_or_else(|| {
                let names: Vec<&str> = Check::ALL.iter().map(|c| c.name()).collect();
                CliError::usage(format!("unknown check '{n}'; known: {}", names.join(", ")))
            })
        })
        .collect()
}

pub fn verify(args: &VerifyArgs) -> Result<ExitCode, CliError> {
    if args.list {
        for c in Check::ALL {
            println!("{}", c.name());
        }
        return Ok(ExitCode::Ok);
    }
    let checks = select_checks(args)?;
    if args.mc_samples < 2 || args.mc_trials == 0 {
        return Err(CliError::usage("--mc-samples must be at least 2 and --mc-trials positive"));
    }
    let cfg =
        SuiteConfig { seed: args.seed, mc_trials: args.mc_trials, mc_samples: args.mc_samples, inject_fault: args.inject_fault };
    let reports = verify::run_suite(&checks, &cfg);
    for r in &reports {
        println!("{}", report_line(r));
    }
    write_reports(&args.out, &reports)?;
    Ok(if reports.iter().all(|r| r.passed) { ExitCode::Ok } else { ExitCode::VerificationFailed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeSummary {
    pub m: f64,
    pub lambda: f64,
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    pub spacing: f64,
    pub min: f64,
    /// Grid indices `(i, j)` of the first minimal cell; `i` indexes `u1`.
    pub argmin: (usize, usize),
    pub argmin_point: (f64, f64),
    pub optimal_value: f64,
}

pub fn default_range(m: f64) -> (f64, f64) {
    let reach = 1.5 * m.abs().sqrt().max(1.0);
    (-reach, reach)
}

/// Grid of `(m − u1² − u2²)² + λ (u1⁴ + u2⁴)`: `grid.csv` (rows index `u1`,
/// columns `u2`), `landscape.json` and `landscape.svg`.
pub fn landscape(args: &LandscapeArgs) -> Result<LandscapeSummary, CliError> {
    if !(2..=MAX_GRID).contains(&args.n) {
        return Err(CliError::usage(format!("--n must lie in [2, {MAX_GRID}], got {}", args.n)));
    }
    if !args.m.is_finite() {
        return Err(CliError::usage("--m must be finite"));
    }
    if !(args.lambda >= 0.0 && args.lambda.is_finite()) {
        return Err(CliError::usage("--lambda must be finite and nonnegative"));
    }
    let (lo, hi) = match args.range.as_deref() {
        Some(&[lo, hi]) => (lo, hi),
        _ => default_range(args.m),
    };
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(CliError::usage("--range needs finite LO < HI"));
    }
    let grid = verify::landscape_grid(args.m, args.lambda, lo, hi, args.n).map_err(|e| CliError::usage(e.to_string()))?;

    create_dir(&args.out)?;
    let desc = format!("m={} lambda={} n={} range=[{lo}, {hi}]", args.m, args.lambda, args.n);
    let mut bytes = format!(
        "# f(u1,u2) = (m - u1^2 - u2^2)^2 + lambda*(u1^4 + u2^4); {desc}; row i is u1 = lo + i*h, column j is u2 = lo + j*h, h = {}\n",
        grid.spacing()
    )
    .into_bytes();
    let values = Matrix::from_vec(args.n, args.n, grid.values.clone())?;
    bytes.extend(csvio::matrix_csv(&values));
    csvio::write_file(&args.out.join("grid.csv"), &bytes)?;
    csvio::write_file(&args.out.join("landscape.svg"), svg::landscape_svg(&grid, &format!("landscape {desc}")).as_bytes())?;

    let summary = LandscapeSummary {
        m: args.m,
        lambda: args.lambda,
        n: args.n,
        lo,
        hi,
        spacing: grid.spacing(),
        min: grid.min(),
        argmin: grid.argmin,
        argmin_point: grid.argmin_point(),
        optimal_value: optimal_value(&[args.m.max(0.0)], 2, args.lambda),
    };
    write_json(&args.out.join("landscape.json"), &summary)?;
    Ok(summary)
}
