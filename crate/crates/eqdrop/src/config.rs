//! Experiment configuration: a flat `key=value` file overlaid by flags.
//!
//! Recognized keys mirror the long flag names (`m`, `scalar`, `gen`, `r`,
//! `lambda`, `theta`, `eta`, `steps`, `seed`, `decay`, `init_scale`, `runs`,
//! `workers`, `tied`, `out`). Blank lines and lines starting with `#` are
//! skipped. A flag always wins over the file, and for the two exclusive
//! groups (matrix source, `lambda`/`theta`) a flag replaces the whole group.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use eqdrop_core::instances;
use eqdrop_core::sgd::SgdConfig;
use eqdrop_core::{DropoutConfig, Matrix};

use crate::cli::{SgdArgs, SourceArgs};
use crate::csvio;
use crate::error::CliError;

pub const DEFAULT_OUT: &str = "eqdrop-out";
pub const DEFAULT_TRAIN_STEPS: u64 = 50_000;

const KEYS: [&str; 15] = [
    "m", "scalar", "gen", "r", "lambda", "theta", "eta", "steps", "seed", "decay", "init_scale", "runs", "workers",
    "tied", "out",
];

/// Parsed `key=value` file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str, name: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| CliError::usage(format!("{name}: line {}: {msg}", k + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(bad(&format!("unknown key '{key}'")));
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(bad(&format!("duplicate key '{key}'")));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.raw(key)
            .map(|v| v.parse().map_err(|_| CliError::usage(format!("config: invalid value '{v}' for '{key}'"))))
            .transpose()
    }
}

/// Where the target matrix comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    File(PathBuf),
    Scalar(f64),
    /// Random bases around an exponentially decaying spectrum.
    Generated { d1: usize, d2: usize, tau: Option<f64>, seed: u64 },
}

impl MatrixSource {
    /// Parses `d1,d2[,tau[,seed]]`; an empty or `auto` tau means the default.
    pub fn parse_gen(spec: &str) -> Result<Self, CliError> {
        let bad = || CliError::usage(format!("--gen expects d1,d2[,tau[,seed]], got '{spec}'"));
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        if !(2..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let dim = |s: &str| s.parse::<usize>().ok().filter(|&d| d > 0).ok_or_else(bad);
        let (d1, d2) = (dim(parts[0])?, dim(parts[1])?);
        let tau = match parts.get(2) {
            None | Some(&"") | Some(&"auto") => None,
            Some(s) => Some(s.parse::<f64>().ok().filter(|t| *t > 0.0 && t.is_finite()).ok_or_else(bad)?),
        };
        let seed = parts.get(3).map(|s| s.parse::<u64>().map_err(|_| bad())).transpose()?.unwrap_or(0);
        Ok(MatrixSource::Generated { d1, d2, tau, seed })
    }

    pub fn load(&self) -> Result<Matrix, CliError> {
        match self {
            MatrixSource::File(path) => csvio::read_matrix(path),
            MatrixSource::Scalar(x) => Ok(Matrix::scalar(*x)),
            MatrixSource::Generated { d1, d2, tau, seed } => Ok(instances::exponential_target(*d1, *d2, *tau, *seed)?),
        }
    }
}

impl fmt::Display for MatrixSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixSource::File(p) => write!(f, "file {}", p.display()),
            MatrixSource::Scalar(x) => write!(f, "scalar {x}"),
            MatrixSource::Generated { d1, d2, tau, seed } => {
                let tau = tau.unwrap_or_else(|| instances::default_tau(*d1, *d2));
                write!(f, "generated {d1}x{d2} tau={tau} seed={seed}")
            }
        }
    }
}

/// Fully resolved settings for `solve` and `train`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: MatrixSource,
    pub r: usize,
    /// One entry per requested `λ` (or the single `θ`).
    pub dropout: Vec<DropoutConfig>,
    /// `theta` is overwritten per entry of `dropout`.
    pub sgd: SgdConfig,
    pub runs: usize,
    /// `None` lets the pool pick.
    pub workers: Option<usize>,
    pub tied: bool,
    pub out: PathBuf,
}

fn parse_list(text: &str, key: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::usage(format!("config: invalid {key} list '{text}'"))))
        .collect()
}

fn resolve_source(args: &SourceArgs, file: &ConfigFile) -> Result<MatrixSource, CliError> {
    if let Some(p) = &args.m {
        return Ok(MatrixSource::File(p.clone()));
    }
    if let Some(x) = args.scalar {
        return Ok(MatrixSource::Scalar(x));
    }
    if let Some(g) = &args.gen {
        return MatrixSource::parse_gen(g);
    }
    let given: Vec<&str> = ["m", "scalar", "gen"].into_iter().filter(|k| file.raw(k).is_some()).collect();
    match given.as_slice() {
        ["m"] => Ok(MatrixSource::File(PathBuf::from(file.raw("m").unwrap()))),
        ["scalar"] => Ok(MatrixSource::Scalar(file.get("scalar")?.unwrap())),
        ["gen"] => MatrixSource::parse_gen(file.raw("gen").unwrap()),
        [] => Err(CliError::usage("no matrix given: use one of --m, --scalar or --gen")),
        _ => Err(CliError::usage("config: m, scalar and gen are mutually exclusive")),
    }
}

fn resolve_dropout(args: &SourceArgs, file: &ConfigFile) -> Result<Vec<DropoutConfig>, CliError> {
    let (lambdas, theta) = if !args.lambda.is_empty() || args.theta.is_some() {
        (args.lambda.clone(), args.theta)
    } else {
        let lambdas = file.raw("lambda").map(|v| parse_list(v, "lambda")).transpose()?.unwrap_or_default();
        let theta = file.get::<f64>("theta")?;
        if !lambdas.is_empty() && theta.is_some() {
            return Err(CliError::usage("config: lambda and theta are mutually exclusive"));
        }
        (lambdas, theta)
    };
    let invalid = |e: eqdrop_core::Error| CliError::usage(e.to_string());
    match theta {
        Some(t) => Ok(vec![DropoutConfig::from_theta(t).map_err(invalid)?]),
        None if lambdas.is_empty() => Err(CliError::usage("one of --lambda or --theta is required")),
        None => lambdas.into_iter().map(|l| DropoutConfig::from_lambda(l).map_err(invalid)).collect(),
    }
}

fn pick<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str) -> Result<Option<T>, CliError> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

/// Overlays flags on the optional config file. `sgd` is `None` for `solve`.
pub fn resolve(args: &SourceArgs, sgd: Option<&SgdArgs>) -> Result<ExperimentConfig, CliError> {
    let file = match &args.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let source = resolve_source(args, &file)?;
    let dropout = resolve_dropout(args, &file)?;
    let r = pick(args.r, &file, "r")?.ok_or_else(|| CliError::usage("--r is required"))?;
    if r == 0 {
        return Err(CliError::usage("--r must be positive"));
    }
    let tied = args.tied || pick(None, &file, "tied")?.unwrap_or(false);
    let out = pick(args.out.clone(), &file, "out")?.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    let none = SgdArgs::default();
    let s = sgd.unwrap_or(&none);
    let base = SgdConfig::default();
    let steps = pick(s.steps, &file, "steps")?.unwrap_or(DEFAULT_TRAIN_STEPS);
    let decay = match pick(s.decay, &file, "decay")? {
        Some(t0) if t0 == f64::INFINITY => None,
        Some(t0) => Some(t0),
        None => Some((steps as f64 / 10.0).max(1.0)),
    };
    let cfg = SgdConfig {
        eta: pick(s.eta, &file, "eta")?.unwrap_or(base.eta),
        steps,
        seed: pick(s.seed, &file, "seed")?.unwrap_or(base.seed),
        init_scale: pick(s.init_scale, &file, "init_scale")?.unwrap_or(base.init_scale),
        theta: 1.0,
        decay,
    };
    let runs = pick(s.runs, &file, "runs")?.unwrap_or(1);
    let workers = pick(s.workers, &file, "workers")?;
    if sgd.is_some() {
        cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
        if runs == 0 {
            return Err(CliError::usage("--runs must be positive"));
        }
        if workers == Some(0) {
            return Err(CliError::usage("--workers must be positive"));
        }
    }
    Ok(ExperimentConfig { source, r, dropout, sgd: cfg, runs, workers, tied, out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> SourceArgs {
        SourceArgs::default()
    }

    #[test]
    fn file_parsing() {
        let f = ConfigFile::parse("# c\n\nr = 3\ninit-scale=0.2\n", "c").unwrap();
        assert_eq!(f.get::<usize>("r").unwrap(), Some(3));
        assert_eq!(f.get::<f64>("init_scale").unwrap(), Some(0.2));
        assert!(ConfigFile::parse("bogus=1", "c").is_err());
        assert!(ConfigFile::parse("r=1\nr=2", "c").is_err());
        assert!(ConfigFile::parse("r 1", "c").is_err());
        assert!(f.get::<f64>("eta").unwrap().is_none());
    }

    #[test]
    fn gen_spec() {
        assert_eq!(
            MatrixSource::parse_gen("30,20").unwrap(),
            MatrixSource::Generated { d1: 30, d2: 20, tau: None, seed: 0 }
        );
        assert_eq!(
            MatrixSource::parse_gen("4, 3, 2.5, 9").unwrap(),
            MatrixSource::Generated { d1: 4, d2: 3, tau: Some(2.5), seed: 9 }
        );
        assert_eq!(
            MatrixSource::parse_gen("4,3,,9").unwrap(),
            MatrixSource::Generated { d1: 4, d2: 3, tau: None, seed: 9 }
        );
        for bad in ["4", "0,3", "4,3,-1", "4,3,1,x", "1,2,3,4,5"] {
            assert!(MatrixSource::parse_gen(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.cfg");
        std::fs::write(&path, "scalar=5\nr=4\ntheta=0.5\neta=0.1\nsteps=7\n").unwrap();
        let a = SourceArgs { config: Some(path), r: Some(2), lambda: vec![0.1, 1.0], ..args() };
        let s = SgdArgs { steps: Some(9), ..SgdArgs::default() };
        let c = resolve(&a, Some(&s)).unwrap();
        assert_eq!(c.source, MatrixSource::Scalar(5.0));
        assert_eq!(c.r, 2);
        assert_eq!(c.dropout.iter().map(|d| d.lambda()).collect::<Vec<_>>(), vec![0.1, 1.0]);
        assert_eq!(c.sgd.eta, 0.1);
        assert_eq!(c.sgd.steps, 9);
        assert_eq!(c.sgd.decay, Some(1.0));
        assert_eq!(c.out, PathBuf::from(DEFAULT_OUT));
    }

    #[test]
    fn required_and_exclusive() {
        let base = SourceArgs { scalar: Some(2.0), r: Some(1), ..args() };
        assert!(resolve(&base, None).is_err());
        assert!(resolve(&SourceArgs { lambda: vec![-1.0], ..base.clone() }, None).is_err());
        assert!(resolve(&SourceArgs { theta: Some(0.0), ..base.clone() }, None).is_err());
        assert!(resolve(&SourceArgs { theta: Some(1.0), r: Some(0), ..base.clone() }, None).is_err());
        let c = resolve(&SourceArgs { theta: Some(1.0), ..base.clone() }, None).unwrap();
        assert!(c.dropout[0].is_unregularized());
        assert!(resolve(&SourceArgs { theta: Some(1.0), scalar: None, ..base }, None).is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.cfg");
        std::fs::write(&path, "scalar=1\ngen=3,3\nr=1\nlambda=1\n").unwrap();
        assert!(resolve(&SourceArgs { config: Some(path.clone()), ..args() }, None).is_err());
        std::fs::write(&path, "scalar=1\nr=1\nlambda=1\ntheta=0.5\n").unwrap();
        assert!(resolve(&SourceArgs { config: Some(path), ..args() }, None).is_err());
    }
}
